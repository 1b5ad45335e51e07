//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime errors and failed exercise
//! checks, 2 on usage errors (unknown flags, bad values, bad config).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use super::config::read_config;
use super::dataset::{
    convert_snapshot_dir, load_dataset_with_report, save_dataset, save_dataset_csv, Column, ConvertOptions,
    DatasetManifest, NanPolicy,
};
use super::exercises::{self, ExerciseReport};
use super::export::{save_decomposition, save_mpod};
use crate::datamatrix::{convergence_curve_upto, remove_mean, total_energy, DataMatrix, NormKind};
use crate::decomp::{delta_decomposition, dft_decomposition, dmd, pod};
use crate::factorize::Decomposition;
use crate::filtering::{design_fir, filter_rows, FilterKind, Window};
use crate::mpod::{mpod, BankMode, FrequencySplitting, MpodResult};
use crate::synthdata::{poiseuille_dataset, two_forcing_dataset, Envelope, PoiseuilleParams};
use crate::{Error, Result};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MODALKIT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "modalkit", version, about = "Modal decompositions of snapshot data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset.
    #[command(subcommand)]
    Generate(Generate),
    /// Decompose a dataset and export the modes as CSV.
    Decompose(DecomposeArgs),
    /// Filter every time series of a dataset with a FIR kernel.
    Filter(FilterArgs),
    /// Print the energy bookkeeping of a decomposition.
    Energy(EnergyArgs),
    /// Write the manifest of a directory of per-snapshot text files.
    Convert(ConvertArgs),
    /// Circulant diagonalization of a FIR lowpass.
    Exercise1(Exercise1Args),
    /// Pulsating Poiseuille flow: eigenfunctions, DFT, POD and DMD.
    Exercise2(Exercise2Args),
    /// Scale separation of two windowed forcings by filtering.
    Exercise3(Exercise3Args),
    /// Multiscale POD properties.
    Exercise4(Exercise4Args),
}

#[derive(Subcommand, Debug)]
enum Generate {
    /// Pulsating Poiseuille flow between two plates.
    Poiseuille(PoiseuilleArgs),
    /// Sum of two windowed Poiseuille pulsations.
    TwoForcing(TwoForcingArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Packed,
    Csv,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PoiseuilleArgs {
    /// Womersley number.
    #[arg(long = "W", visible_alias = "w", default_value_t = 10.0)]
    womersley: f64,
    /// Forcing amplitude.
    #[arg(long = "pA", visible_alias = "pa", default_value_t = 60.0)]
    p_a: f64,
    #[arg(long, default_value_t = 2000)]
    n_y: usize,
    #[arg(long, default_value_t = 200)]
    n_t: usize,
    /// Samples per unit dimensionless time.
    #[arg(long, default_value_t = 10.0)]
    fs: f64,
    #[arg(long, default_value_t = 10)]
    n_modes: usize,
    #[arg(long, value_enum, default_value_t = Format::Packed)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Part {
    Combined,
    F1,
    F2,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct TwoForcingArgs {
    #[arg(long = "W1", visible_alias = "w1", default_value_t = 1.0)]
    w1: f64,
    #[arg(long = "W2", visible_alias = "w2", default_value_t = 4.0)]
    w2: f64,
    #[arg(long, default_value_t = 1.0)]
    gain1: f64,
    #[arg(long, default_value_t = 6.0)]
    gain2: f64,
    #[arg(long, default_value_t = 500)]
    n_y: usize,
    #[arg(long, default_value_t = 600)]
    n_t: usize,
    #[arg(long, default_value_t = 10.0)]
    fs: f64,
    #[arg(long, value_enum, default_value_t = Part::Combined)]
    part: Part,
    #[arg(long, value_enum, default_value_t = Format::Packed)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Delta,
    Dft,
    Pod,
    Dmd,
    Mpod,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BankArg {
    Fir,
    Ideal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NanArg {
    Reject,
    ZeroFill,
}

impl From<NanArg> for NanPolicy {
    fn from(n: NanArg) -> Self {
        match n {
            NanArg::Reject => NanPolicy::Reject,
            NanArg::ZeroFill => NanPolicy::ZeroFill,
        }
    }
}

/// Options shared by the subcommands that decompose a dataset.
#[derive(Args, Debug)]
struct MethodArgs {
    /// Dataset directory or manifest file.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// mPOD bands in Hz, `lo:hi,lo:hi,...`; the full range when absent.
    #[arg(long)]
    bands: Option<String>,
    #[arg(long, default_value_t = 211)]
    fir_order: usize,
    #[arg(long, value_enum, default_value_t = BankArg::Fir)]
    bank: BankArg,
    /// DMD truncation rank.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    remove_mean: bool,
    /// Override the manifest's NaN policy.
    #[arg(long, value_enum)]
    nan_policy: Option<NanArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DecomposeArgs {
    #[command(flatten)]
    common: MethodArgs,
    /// Modes exported as psi/phi/spectrum files.
    #[arg(long, default_value_t = 10)]
    modes: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct EnergyArgs {
    #[command(flatten)]
    common: MethodArgs,
    #[arg(long, default_value_t = 10)]
    modes: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Spectral)]
    norm: NormArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Spectral,
    Frobenius,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Lowpass,
    Highpass,
    Bandpass,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WindowArg {
    Hamming,
    Hann,
    Rect,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct FilterArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Cutoff(s) in Hz; two comma-separated values for a bandpass.
    #[arg(long, value_delimiter = ',', required = true)]
    cutoff: Vec<f64>,
    #[arg(long, default_value_t = 211)]
    order: usize,
    #[arg(long, value_enum, default_value_t = WindowArg::Hamming)]
    window: WindowArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ConvertArgs {
    /// Directory holding the snapshot files; the manifest is written there.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, default_value = "Res")]
    prefix: String,
    #[arg(long, default_value = ".dat")]
    extension: String,
    /// Column roles of the snapshot files: x, y, u, v, w or - to skip.
    #[arg(long, default_value = "x,y,u,v")]
    columns: String,
    /// Mesh file with the point coordinates, relative to the directory.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value = "x,y")]
    mesh_columns: String,
    #[arg(long, default_value = "auto")]
    delimiter: String,
    #[arg(long, value_enum, default_value_t = NanArg::Reject)]
    nan_policy: NanArg,
    /// Sampling frequency in Hz.
    #[arg(long)]
    fs: f64,
    #[arg(long)]
    dx: Option<f64>,
    /// Grid size `NXxNY`, needed when the files carry no coordinates.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct Exercise1Args {
    #[arg(long, default_value_t = 1024)]
    n_t: usize,
    #[arg(long, default_value_t = 211)]
    order: usize,
    /// Normalized cutoff.
    #[arg(long, default_value_t = 0.1)]
    cutoff: f64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct Exercise2Args {
    #[arg(long = "W", visible_alias = "w", default_value_t = 10.0)]
    womersley: f64,
    #[arg(long = "pA", visible_alias = "pa", default_value_t = 60.0)]
    p_a: f64,
    #[arg(long, default_value_t = 2000)]
    n_y: usize,
    #[arg(long, default_value_t = 200)]
    n_t: usize,
    #[arg(long, default_value_t = 10.0)]
    fs: f64,
    #[arg(long, default_value_t = 10)]
    n_modes: usize,
    /// Directory for the amplitude-decay curves and mode files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct Exercise3Args {
    #[arg(long, default_value_t = 500)]
    n_y: usize,
    #[arg(long, default_value_t = 600)]
    n_t: usize,
    #[arg(long, default_value_t = 6.0)]
    gain2: f64,
    /// Normalized highpass cutoff.
    #[arg(long, default_value_t = 0.1)]
    cutoff: f64,
    #[arg(long, default_value_t = 101)]
    order: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct Exercise4Args {
    #[arg(long, default_value_t = 96)]
    n_s: usize,
    #[arg(long, default_value_t = 512)]
    n_t: usize,
    #[arg(long, default_value_t = 101)]
    fir_order: usize,
    #[arg(long, default_value_t = 4)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Settings of one decomposition run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    /// mPOD bands as `lo:hi,...` in Hz; `None` is the full range.
    pub bands: Option<String>,
    pub fir_order: usize,
    pub bank: BankMode,
    pub dmd_rank: Option<usize>,
    pub modes: usize,
    pub remove_mean: bool,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(method: Method, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            method,
            bands: None,
            fir_order: 211,
            bank: BankMode::Fir,
            dmd_rank: None,
            modes: 10,
            remove_mean: false,
            out_dir: out_dir.into(),
        }
    }

    /// Check the settings against a sampling frequency.
    pub fn validate(&self, f_s: f64) -> Result<()> {
        if self.fir_order.is_multiple_of(2) {
            return Err(Error::Config(format!("fir_order must be odd, got {}", self.fir_order)));
        }
        self.splitting(f_s).map(|_| ())
    }

    pub fn splitting(&self, f_s: f64) -> Result<FrequencySplitting> {
        match &self.bands {
            Some(b) => FrequencySplitting::parse(b, f_s),
            None => FrequencySplitting::from_edges(&[], f_s),
        }
    }
}

/// Result of [`run_decomposition`].
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum RunOutput {
    Plain(Decomposition),
    Mpod(MpodResult),
}

impl RunOutput {
    pub fn decomposition(&self) -> &Decomposition {
        match self {
            RunOutput::Plain(d) => d,
            RunOutput::Mpod(m) => &m.decomposition,
        }
    }
}

/// Decompose `d` as configured; the mean is removed first when asked.
pub fn run_decomposition(cfg: &RunConfig, d: &DataMatrix) -> Result<(DataMatrix, RunOutput)> {
    cfg.validate(d.meta().f_s)?;
    let d = if cfg.remove_mean { remove_mean(d).0 } else { d.clone() };
    let out = match cfg.method {
        Method::Delta => RunOutput::Plain(delta_decomposition(&d)?),
        Method::Dft => RunOutput::Plain(dft_decomposition(&d)?),
        Method::Pod => RunOutput::Plain(pod(&d)?),
        Method::Dmd => RunOutput::Plain(dmd(&d, cfg.dmd_rank)?),
        Method::Mpod => RunOutput::Mpod(mpod(&d, &cfg.splitting(d.meta().f_s)?, cfg.fir_order, cfg.bank)?),
    };
    Ok((d, out))
}

/// Start the global thread pool with [`THREADS_ENV`] threads, if set.
pub fn configure_threads() -> Option<usize> {
    let n: usize = std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::debug!("thread pool already configured: {e}");
    }
    Some(n)
}

/// Splice the `key = value` pairs of `--config FILE` in front of the
/// subcommand's own flags, so flags given on the command line win.
fn inject_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Error::Config("--config needs a file".into()))?,
    };
    let pairs = read_config(Path::new(&path))?;
    let mut cmd = Cli::command();
    let mut at = 1;
    while let Some(sub) = args.get(at).and_then(|a| cmd.find_subcommand(a)).cloned() {
        cmd = sub;
        at += 1;
    }
    let mut injected = Vec::new();
    for (line, key, value) in pairs {
        let key = key.replace('_', "-");
        let arg = cmd
            .get_arguments()
            .find(|a| {
                a.get_long().is_some_and(|l| l.eq_ignore_ascii_case(&key))
                    || a.get_all_aliases().is_some_and(|al| al.iter().any(|x| x.eq_ignore_ascii_case(&key)))
            })
            .filter(|a| a.get_id() != "config")
            .ok_or_else(|| Error::Config(format!("{path}:{line}: unknown key '{key}'")))?;
        let long = arg.get_long().expect("config keys map to long flags");
        if arg.get_action().takes_values() {
            injected.push(format!("--{long}={value}"));
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{long}")),
                "false" | "no" | "0" => {}
                other => return Err(Error::Config(format!("{path}:{line}: '{key}' expects true or false, got '{other}'"))),
            }
        }
    }
    let mut out = args[..at].to_vec();
    out.extend(injected);
    out.extend(args[at..].iter().cloned());
    Ok(out)
}

fn load(input: &Path, nan: Option<NanArg>) -> Result<DataMatrix> {
    let mut m = DatasetManifest::read(input)?;
    if let Some(n) = nan {
        m.nan_policy = n.into();
    }
    let (d, report) = load_dataset_with_report(&m)?;
    if report.nan_cells > 0 {
        println!(
            "replaced {} NaN cells in {} snapshots by zero",
            report.nan_cells,
            report.snapshots_with_nan.len()
        );
    }
    Ok(d)
}

fn write(d: &DataMatrix, out: &Path, format: Format) -> Result<()> {
    let m = match format {
        Format::Packed => save_dataset(d, out)?,
        Format::Csv => save_dataset_csv(d, out)?,
    };
    println!("wrote {}×{} dataset to {}", d.n_s(), m.n_t, out.display());
    Ok(())
}

fn run_config(a: &MethodArgs, modes: usize, out: PathBuf) -> RunConfig {
    RunConfig {
        method: a.method,
        bands: a.bands.clone(),
        fir_order: a.fir_order,
        bank: match a.bank {
            BankArg::Fir => BankMode::Fir,
            BankArg::Ideal => BankMode::Ideal,
        },
        dmd_rank: a.rank,
        modes,
        remove_mean: a.remove_mean,
        out_dir: out,
    }
}

fn summarize(out: &RunOutput) {
    let dec = out.decomposition();
    let sorted = dec.sorted_view();
    let shown: Vec<String> = sorted.sigma.iter().take(5).map(|s| format!("{s:.6e}")).collect();
    println!("{} decomposition: {} modes; leading amplitudes {}", dec.kind.name(), dec.rank(), shown.join(" "));
    for n in &dec.notes {
        println!("note: {n}");
    }
}

fn report(rep: ExerciseReport) -> Result<i32> {
    print!("{rep}");
    if rep.passed() {
        Ok(0)
    } else {
        eprintln!("{}: {} check(s) failed", rep.name, rep.checks.iter().filter(|c| !c.passed()).count());
        Ok(1)
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Generate(Generate::Poiseuille(a)) => {
            let p = PoiseuilleParams {
                womersley: a.womersley,
                p_hat_a: a.p_a,
                n_y: a.n_y,
                n_t: a.n_t,
                f_s_hat: a.fs,
                n_modes: a.n_modes,
            };
            write(&poiseuille_dataset(&p)?, &a.out, a.format)?;
        }
        Command::Generate(Generate::TwoForcing(a)) => {
            let p = PoiseuilleParams {
                womersley: a.w1,
                p_hat_a: 1.0,
                n_y: a.n_y,
                n_t: a.n_t,
                f_s_hat: a.fs,
                n_modes: 10,
            };
            let e1 = Envelope::first_half(a.n_t, a.gain1);
            let e2 = Envelope::second_half(a.n_t, a.gain2);
            let tf = two_forcing_dataset(a.w1, a.w2, [&e1, &e2], &p)?;
            let d = match a.part {
                Part::Combined => tf.combined,
                Part::F1 => tf.f1_only,
                Part::F2 => tf.f2_only,
            };
            write(&d, &a.out, a.format)?;
        }
        Command::Decompose(a) => {
            let d = load(&a.common.input, a.common.nan_policy)?;
            let cfg = run_config(&a.common, a.modes, a.out);
            let (d, out) = run_decomposition(&cfg, &d)?;
            summarize(&out);
            let s = match &out {
                RunOutput::Plain(dec) => save_decomposition(dec, &d, &cfg.out_dir, cfg.modes)?,
                RunOutput::Mpod(m) => save_mpod(m, &d, &cfg.out_dir, cfg.modes)?,
            };
            println!("wrote {} files to {}", s.files.len(), cfg.out_dir.display());
        }
        Command::Energy(a) => {
            let d = load(&a.common.input, a.common.nan_policy)?;
            let cfg = run_config(&a.common, a.modes, PathBuf::new());
            let (d, out) = run_decomposition(&cfg, &d)?;
            let dec = out.decomposition().sorted_view();
            let norm = match a.norm {
                NormArg::Spectral => NormKind::Spectral,
                NormArg::Frobenius => NormKind::Frobenius,
            };
            let curve = convergence_curve_upto(&d, &dec, norm, a.modes)?;
            let scale = (d.n_s() * d.n_t()) as f64;
            println!("total energy {:.16e}", total_energy(&d));
            println!("sum of normalized energies {:.16e}", dec.sigma.iter().map(|s| s * s / scale).sum::<f64>());
            println!("r,sigma_hat_sq,error");
            for (r, e) in curve.direct.iter().enumerate() {
                // row r carries the energy of the r-th retained mode
                let s = if r == 0 { String::new() } else { format!("{:.16e}", dec.sigma[r - 1].powi(2) / scale) };
                println!("{r},{s},{e:.16e}");
            }
            if let Some(c) = &curve.closed_form {
                let dev = c.iter().zip(&curve.direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                println!("closed-form vs direct convergence (max abs) {dev:.3e}");
            }
        }
        Command::Filter(a) => {
            let d = load(&a.input, None)?;
            let f_s = d.meta().f_s;
            let kind = match a.kind {
                KindArg::Lowpass => FilterKind::Lowpass,
                KindArg::Highpass => FilterKind::Highpass,
                KindArg::Bandpass => FilterKind::Bandpass,
            };
            let window = match a.window {
                WindowArg::Hamming => Window::Hamming,
                WindowArg::Hann => Window::Hann,
                WindowArg::Rect => Window::Rect,
            };
            let cutoffs: Vec<f64> = a.cutoff.iter().map(|c| c / f_s).collect();
            let h = design_fir(kind, &cutoffs, a.order, window)?;
            write(&filter_rows(&d, &h)?, &a.out, Format::Packed)?;
        }
        Command::Convert(a) => {
            let parse_cols = |s: &str| s.split(',').map(str::parse).collect::<Result<Vec<Column>>>();
            let mut o = ConvertOptions::new(&a.prefix, &a.extension, a.fs);
            o.columns = parse_cols(&a.columns)?;
            o.mesh_columns = parse_cols(&a.mesh_columns)?;
            o.mesh_file = a.mesh;
            o.delimiter = a.delimiter.parse()?;
            o.nan_policy = a.nan_policy.into();
            o.dx = a.dx;
            o.grid = match a.grid {
                Some(g) => {
                    let (x, y) = g
                        .split_once(['x', 'X'])
                        .ok_or_else(|| Error::Config(format!("grid '{g}' is not NXxNY")))?;
                    let p = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Config(format!("grid '{g}': {e}")));
                    Some((p(x)?, p(y)?))
                }
                None => None,
            };
            let m = convert_snapshot_dir(&a.dir, &o)?;
            println!(
                "{} snapshots on a {}×{} grid with {} component(s); manifest written to {}",
                m.n_t,
                m.n_x,
                m.n_y,
                m.n_components,
                a.dir.display()
            );
        }
        Command::Exercise1(a) => {
            return report(exercises::exercise1(&exercises::Exercise1 {
                n_t: a.n_t,
                order: a.order,
                cutoff: a.cutoff,
                ..Default::default()
            })?)
        }
        Command::Exercise2(a) => {
            return report(exercises::exercise2(&exercises::Exercise2 {
                params: PoiseuilleParams {
                    womersley: a.womersley,
                    p_hat_a: a.p_a,
                    n_y: a.n_y,
                    n_t: a.n_t,
                    f_s_hat: a.fs,
                    n_modes: a.n_modes,
                },
                out: a.out,
                export_modes: 10,
            })?)
        }
        Command::Exercise3(a) => {
            return report(exercises::exercise3(&exercises::Exercise3 {
                n_y: a.n_y,
                n_t: a.n_t,
                gain2: a.gain2,
                cutoff: a.cutoff,
                order: a.order,
                out: a.out,
                ..Default::default()
            })?)
        }
        Command::Exercise4(a) => {
            return report(exercises::exercise4(&exercises::Exercise4 {
                n_s: a.n_s,
                n_t: a.n_t,
                fir_order: a.fir_order,
                seed: a.seed,
                out: a.out,
            })?)
        }
    }
    Ok(0)
}

/// Run the CLI on `args` (program name first) and return the exit code.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    configure_threads();
    let args: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let args = match inject_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}
