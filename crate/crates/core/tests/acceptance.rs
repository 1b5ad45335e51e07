//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line followed
//! by its measured values; the process exits non-zero if any criterion
//! fails.
//!
//! Tutorial checks read `MODALKIT_TC1_DIR` and `MODALKIT_TC2_DIR` and are
//! reported as `SKIP` when those are unset.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use modalkit::clio::exercises::{self, ExerciseReport};
use modalkit::clio::{self, Column, ConvertOptions, DatasetManifest};
use modalkit::datamatrix::{self, convergence_curve};
use modalkit::mpod::{self, BankMode, FrequencySplitting};
use modalkit::{decomp, factorize, filtering, spectral, synthdata};
use modalkit::{DataMatrix, NormKind, RMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(Vec<String>),
    Fail(Vec<String>),
    Skip(String),
}

/// Collects measured values against limits.
struct Log {
    lines: Vec<String>,
    ok: bool,
}

impl Log {
    fn new() -> Self {
        Log { lines: Vec::new(), ok: true }
    }

    fn below(&mut self, name: &str, value: f64, limit: f64) {
        let ok = value < limit;
        self.push(ok, format!("{name}: {value:.3e} < {limit:.1e}"));
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.push(ok, name.to_string());
    }

    fn push(&mut self, ok: bool, line: String) {
        self.ok &= ok;
        self.lines.push(format!("{}  {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn report(&mut self, r: &ExerciseReport) {
        for c in &r.checks {
            self.push(c.passed(), c.to_string().trim_start_matches("PASS").trim_start_matches("FAIL").trim().to_string());
        }
    }

    fn finish(self) -> Outcome {
        if self.ok {
            Outcome::Pass(self.lines)
        } else {
            Outcome::Fail(self.lines)
        }
    }
}

fn run(id: &str, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome::Fail(vec![format!("FAIL  panicked: {msg}")])
        });
    let elapsed = start.elapsed();
    let (status, mut lines, ok) = match outcome {
        Outcome::Pass(l) => ("PASS", l, true),
        Outcome::Fail(l) => ("FAIL", l, false),
        Outcome::Skip(why) => {
            println!("SKIP criterion {id}: {title} ({why})");
            return true;
        }
    };
    let mut ok = ok;
    let mut status = status;
    if let Some(b) = budget {
        let in_time = elapsed <= b;
        lines.push(format!(
            "{}  runtime: {:.2} s <= {:.0} s",
            if in_time { "ok  " } else { "FAIL" },
            elapsed.as_secs_f64(),
            b.as_secs_f64()
        ));
        if !in_time {
            ok = false;
            status = "FAIL";
        }
    }
    println!("{status} criterion {id}: {title} ({:.2} s)", elapsed.as_secs_f64());
    for l in lines {
        println!("      {l}");
    }
    ok
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RMatrix {
    RMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn criterion1() -> Outcome {
    let mut log = Log::new();
    let mut rng = ChaCha8Rng::seed_from_u64(50_30);
    let d = DataMatrix::from_matrix(random_matrix(&mut rng, 50, 30), 1.0).unwrap();
    let p = decomp::pod(&d).unwrap();

    let eye = |n: usize| modalkit::CMatrix::identity(n, n);
    let r = p.rank();
    log.holds(&format!("rank {r} == 30"), r == 30);
    let phi_gram = (p.phi.adjoint() * &p.phi - eye(r)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let psi_gram = (p.psi.adjoint() * &p.psi - eye(r)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    log.below("max |Phi^H Phi - I|", phi_gram, 1e-8);
    log.below("max |Psi^H Psi - I|", psi_gram, 1e-8);

    // reconstruction assembled here, not through the library
    let mut rec = RMatrix::zeros(50, 30);
    for k in 0..r {
        for i in 0..50 {
            for j in 0..30 {
                rec[(i, j)] += (p.phi[(i, k)] * p.sigma[k] * p.psi[(j, k)]).re;
            }
        }
    }
    log.below("full-rank reconstruction (rel Frobenius)", (&rec - d.values()).norm() / d.values().norm(), 1e-10);
    let lib_rec = factorize::reconstruct(&p, r).unwrap();
    log.below("library reconstruction (rel Frobenius)", (&lib_rec - d.values()).norm() / d.values().norm(), 1e-10);

    let n = (50 * 30) as f64;
    let parseval: f64 = p.sigma.iter().map(|s| s * s / n).sum();
    let e = datamatrix::total_energy(&d);
    log.below("|sum sigma_hat^2 - total energy| / total energy", (parseval - e).abs() / e, 1e-10);

    // amplitudes against an independent SVD
    let sv = nalgebra::SVD::new(d.values().clone(), false, false).singular_values;
    let mut sv: Vec<f64> = sv.iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let dev = p.sigma.iter().zip(&sv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / sv[0];
    log.below("sigma vs reference SVD (max rel to sigma_1)", dev, 1e-10);

    for norm in [NormKind::Spectral, NormKind::Frobenius] {
        let c = convergence_curve(&d, &p, norm).unwrap();
        let closed = c.closed_form.expect("POD carries a closed form");
        let worst = closed.iter().zip(&c.direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        log.below(&format!("closed-form vs direct convergence ({norm:?})"), worst, 1e-8);
        log.holds(&format!("convergence non-increasing ({norm:?})"), c.direct.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
    log.finish()
}

fn criterion2() -> Outcome {
    let mut log = Log::new();
    let r = exercises::exercise1(&exercises::Exercise1::default()).unwrap();
    log.report(&r);

    // naive O(n²) transform as an oracle for the FFT path
    let n = 1024;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    let fast = spectral::dft_unnormalized(&x);
    let mut worst: f64 = 0.0;
    for (k, f) in fast.iter().enumerate() {
        let s: C64 = x
            .iter()
            .enumerate()
            .map(|(j, v)| v * C64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
            .sum();
        worst = worst.max((s - f).norm());
    }
    let scale = fast.iter().map(|z| z.norm()).fold(0.0, f64::max);
    log.below("FFT vs direct summation DFT (max rel)", worst / scale, 1e-10);

    // circular convolution by explicit index arithmetic
    let h = filtering::design_fir(filtering::FilterKind::Lowpass, &[0.1], 211, filtering::Window::Hamming).unwrap();
    let c = filtering::circulant(&h, n).unwrap();
    let col = c.first_column();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = c.apply(&u).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let s: f64 = (0..n).map(|j| col[(i + n - j) % n] * u[j]).sum();
        worst = worst.max((s - y[i]).abs());
    }
    log.below("circulant apply vs index-arithmetic convolution (max abs)", worst, 1e-10);
    log.finish()
}

fn criterion3() -> Outcome {
    let mut log = Log::new();
    let dir = tempfile::tempdir().unwrap();
    let p = exercises::Exercise2 {
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let params = p.params.clone();
    log.holds(
        "parameters n_y=2000 n_t=200 fs=10 W=10 pA=60 n_modes=10",
        params.n_y == 2000
            && params.n_t == 200
            && params.f_s_hat == 10.0
            && params.womersley == 10.0
            && params.p_hat_a == 60.0
            && params.n_modes == 10,
    );
    let r = exercises::exercise2(&p).unwrap();
    log.report(&r);

    let decay = std::fs::read_to_string(dir.path().join("amplitude_decay.csv")).unwrap();
    for m in ["pod", "dft", "dmd"] {
        let rows = decay.lines().filter(|l| l.starts_with(&format!("{m},"))).count();
        log.holds(&format!("amplitude decay rows for {m}: {rows} > 0"), rows > 0);
        let sig = dir.path().join(m).join("sigmas.csv");
        log.holds(&format!("{m}/sigmas.csv exported"), sig.is_file());
    }

    // independent closed form of the leading eigenfunction amplitude
    let w: f64 = 10.0;
    let pa: f64 = 60.0;
    let closed = 16.0 * pa / (PI * (16.0 * w.powi(4) + PI.powi(4)).sqrt());
    log.below(
        "leading eigenfunction amplitude vs closed form (rel)",
        (synthdata::eigen_amplitude(1, w, pa) - closed).abs() / closed,
        1e-14,
    );
    log.finish()
}

fn criterion4() -> Outcome {
    let mut log = Log::new();
    let r = exercises::exercise3(&exercises::Exercise3::default()).unwrap();
    log.report(&r);
    log.finish()
}

fn criterion5() -> Outcome {
    let mut log = Log::new();
    let p = exercises::Exercise4::default();
    log.holds(&format!("n_t = {} <= 512", p.n_t), p.n_t <= 512);
    let r = exercises::exercise4(&p).unwrap();
    log.report(&r);
    log.finish()
}

/// Manifest of a tutorial directory, converting the raw archive on first use.
fn tutorial_manifest(dir: &Path, opts: ConvertOptions) -> modalkit::Result<DatasetManifest> {
    match DatasetManifest::read(dir) {
        Ok(m) => Ok(m),
        Err(_) => clio::convert_snapshot_dir(dir, &opts),
    }
}

/// Frequency of the largest folded bin of `Σ |x̂|²` over the given series.
fn folded_peak(series: impl Iterator<Item = Vec<C64>>, n_t: usize, f_s: f64) -> (usize, f64) {
    let mut power = vec![0.0; n_t / 2 + 1];
    for s in series {
        for (k, z) in spectral::analysis(&s).iter().enumerate() {
            power[k.min(n_t - k)] += z.norm_sqr();
        }
    }
    let k = (1..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
    (k, spectral::folded_frequency(k, n_t, f_s))
}

fn leading_in_scale(res: &modalkit::MpodResult, scale: usize) -> Option<usize> {
    (0..res.decomposition.rank())
        .filter(|&r| res.scale_of_mode[r] == scale)
        .max_by(|&a, &b| res.decomposition.sigma[a].total_cmp(&res.decomposition.sigma[b]))
}

fn mode_peak(res: &modalkit::MpodResult, r: usize, n_t: usize, f_s: f64) -> (usize, f64) {
    let psi: Vec<C64> = res.decomposition.psi.column(r).iter().cloned().collect();
    folded_peak(std::iter::once(psi), n_t, f_s)
}

fn criterion6a(dir: PathBuf) -> Outcome {
    let mut log = Log::new();
    let opts = ConvertOptions::new("Res", ".dat", 2000.0);
    let m = tutorial_manifest(&dir, opts).unwrap();
    let (d, _) = clio::load_dataset_with_report(&m).unwrap();
    log.holds(&format!("shape {}x{} == 13680x2000", d.n_s(), d.n_t()), d.n_s() == 13680 && d.n_t() == 2000);
    let (d, _) = datamatrix::remove_mean(&d);
    let (h, u_j) = (0.004, 6.5);
    let (lo, hi) = (0.1 * u_j / h, 0.2 * u_j / h);
    let split = FrequencySplitting::from_edges(&[lo, hi], d.meta().f_s).unwrap();
    let res = mpod::mpod(&d, &split, 211, BankMode::Fir).unwrap();
    match leading_in_scale(&res, 1) {
        Some(r) => {
            let (_, f) = mode_peak(&res, r, d.n_t(), d.meta().f_s);
            log.holds(&format!("leading in-band mode peaks at {f:.2} Hz in [{lo}, {hi}]"), f >= lo && f <= hi);
        }
        None => log.holds("in-band scale produced a mode", false),
    }
    log.finish()
}

fn criterion6b(dir: PathBuf) -> Outcome {
    let mut log = Log::new();
    let mut opts = ConvertOptions::new("Res", ".dat", 3000.0);
    opts.columns = vec![Column::U, Column::V];
    opts.mesh_file = Some(dir.join("MESH.dat"));
    let m = tutorial_manifest(&dir, opts).unwrap();
    let (d, _) = clio::load_dataset_with_report(&m).unwrap();
    log.holds(&format!("shape {}x{} == 4260x13200", d.n_s(), d.n_t()), d.n_s() == 4260 && d.n_t() == 13200);
    let (d, _) = datamatrix::remove_mean(&d);
    let (n_t, f_s) = (d.n_t(), d.meta().f_s);
    let split = FrequencySplitting::parse("0:10,290:320,430:470", f_s).unwrap();
    let res = mpod::mpod(&d, &split, 211, BankMode::Fir).unwrap();
    let bank = res.bank.as_ref().expect("FIR bank");
    for (scale, near) in [(1usize, 303.0), (2, 459.0)] {
        let filtered = filtering::filter_rows_response(&d, &bank.responses[scale]).unwrap();
        let v = filtered.values();
        let (k_data, f_data) = folded_peak(
            (0..v.nrows()).map(|i| v.row(i).iter().map(|&x| C64::new(x, 0.0)).collect()),
            n_t,
            f_s,
        );
        match leading_in_scale(&res, scale) {
            Some(r) => {
                let (k, f) = mode_peak(&res, r, n_t, f_s);
                log.holds(
                    &format!(
                        "scale {} leading mode peak {f:.2} Hz within 1 bin of filtered-data peak {f_data:.2} Hz (expected near {near} Hz)",
                        scale + 1
                    ),
                    k.abs_diff(k_data) <= 1,
                );
            }
            None => log.holds(&format!("scale {} produced a mode", scale + 1), false),
        }
    }
    log.finish()
}

fn tutorial(var: &str, f: fn(PathBuf) -> Outcome) -> Outcome {
    match std::env::var_os(var) {
        Some(dir) => f(PathBuf::from(dir)),
        None => Outcome::Skip(format!("{var} not set")),
    }
}

fn main() {
    // the harness passes filter arguments such as `--quiet`; none select criteria
    let secs = Duration::from_secs;
    let results = [
        run("1", "orthonormal framework on a random 50x30 POD", Some(secs(1)), criterion1),
        run("2", "circulant diagonalization of a 211-tap Hamming lowpass", Some(secs(5)), criterion2),
        run("3", "pulsating Poiseuille flow at full scale", Some(secs(30)), criterion3),
        run("4", "scale separation of a two-forcing flow", Some(secs(60)), criterion4),
        run("5", "multiscale POD properties", Some(secs(60)), criterion5),
        run("6a", "tutorial 1 jet, in-band leading mode", None, || tutorial("MODALKIT_TC1_DIR", criterion6a)),
        run("6b", "tutorial 2 cylinder, scale peaks", None, || tutorial("MODALKIT_TC2_DIR", criterion6b)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("\nacceptance: {} criteria, {failed} failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
