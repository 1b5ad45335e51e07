//! Command-line interface, dataset I/O, configuration and CSV export.

mod cli;
pub mod config;
pub mod dataset;
pub mod exercises;
pub mod export;
pub mod packed;

pub use cli::{cli_run, configure_threads, run_decomposition, Method, RunConfig, RunOutput, THREADS_ENV};
pub use dataset::{
    convert_snapshot_dir, load_dataset, load_dataset_with_report, save_dataset, save_dataset_csv, Column,
    ConvertOptions, DatasetManifest, Delimiter, Layout, LoadReport, NanPolicy,
};
pub use export::{frobenius_convergence, read_sigmas, save_decomposition, save_mpod, ExportSummary};
