//! Modal decompositions of space-time data.
//!
//! Every decomposition here is a factorization `D = Φ Σ Ψᵀ` of a snapshot
//! matrix `D` (space along rows, time along columns) into spatial structures
//! `Φ`, real non-negative amplitudes `Σ` and temporal structures `Ψ`. One
//! factor is chosen (Fourier harmonics, impulses, correlation eigenvectors,
//! DMD Vandermonde columns, or the multiscale POD basis) and the other is
//! completed by projection.
//!
//! Module map:
//!
//! * [`datamatrix`]: the snapshot matrix, flattening of gridded fields and
//!   energy/convergence diagnostics.
//! * [`basis`]: Fourier, impulse and Vandermonde bases, projections and 2D
//!   transforms.
//! * [`factorize`]: completion of a factorization from a given spatial or
//!   temporal basis, reconstruction and truncation.
//! * [`decomp`]: delta, DFT, POD and DMD decompositions.
//! * [`filtering`]: windowed-sinc FIR design, circulant operators and the
//!   filtered correlation machinery.
//! * [`mpod`]: the multiscale POD.
//! * [`synthdata`]: analytic and planted datasets.
//! * [`clio`]: dataset loaders, CSV/binary export and the command line.

pub mod basis;
pub mod clio;
pub mod datamatrix;
pub mod decomp;
mod error;
pub mod factorize;
pub mod filtering;
pub mod linalg;
pub mod mpod;
pub mod spectral;
pub mod synthdata;

pub use error::{Error, Result};

/// Complex double used for every complex-valued basis or spectrum.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;

pub use basis::{BasisKind, BasisMatrix, ProjectionMode, Projector};
pub use datamatrix::{DataMatrix, EnergyReport, GridMeta, NormKind};
pub use decomp::{DmdEigenSystem, PodEigenSystem};
pub use factorize::{Decomposition, DecompositionKind};
pub use filtering::{CirculantOperator, FilterKind, FirKernel, Window};
pub use mpod::{BankMode, FrequencySplitting, MpodResult, ScaleBank};
