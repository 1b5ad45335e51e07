//! End-to-end exercise runs with pass/fail checks.
//!
//! Each run is deterministic: random inputs come from seeded generators.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::export::save_decomposition;
use crate::basis::fourier_basis;
use crate::datamatrix::DataMatrix;
use crate::decomp::{dft_decomposition, dmd, dmd_eigenvalues, pod};
use crate::factorize::{descending_order, reconstruct, Decomposition};
use crate::filtering::{
    circulant, design_fir, diagonalize_circulant, filter_correlation_response, filter_rows, stop_band_attenuation_db,
    stop_band_fraction, stop_band_power_ratio, FilterKind, Window,
};
use crate::linalg::{matmul, max_abs, spectral_norm, svd_thin, sym_eig_desc, to_complex};
use crate::mpod::{mpod, BankMode, FrequencySplitting};
use crate::spectral;
use crate::synthdata::{poiseuille_dataset, poiseuille_modes, two_forcing_dataset, Envelope, PoiseuilleParams};
use crate::{CMatrix, Error, RMatrix, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// Pass when `value < limit`.
    Below,
    /// Pass when `value ≤ limit`.
    AtMost,
    /// Pass when `value > limit`.
    Above,
    /// Pass when `value ≥ limit`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::Below => self.value < self.limit,
            Bound::AtMost => self.value <= self.limit,
            Bound::Above => self.value > self.limit,
            Bound::AtLeast => self.value >= self.limit,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::Below => "<",
            Bound::AtMost => "<=",
            Bound::Above => ">",
            Bound::AtLeast => ">=",
        };
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict}  {}: {:.6e} {op} {:.3e}", self.name, self.value, self.limit)
    }
}

#[derive(Clone, Debug)]
pub struct ExerciseReport {
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub elapsed: Duration,
}

impl ExerciseReport {
    fn new(name: &'static str) -> Self {
        ExerciseReport {
            name,
            checks: Vec::new(),
            notes: Vec::new(),
            artifacts: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, name: impl Into<String>, value: f64, bound: Bound, limit: f64) {
        self.checks.push(Check::new(name, value, bound, limit));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ExerciseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({:.2} s)", self.name, self.elapsed.as_secs_f64())?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        for a in &self.artifacts {
            writeln!(f, "  wrote {}", a.display())?;
        }
        Ok(())
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn column(m: &CMatrix, r: usize) -> Vec<C64> {
    m.column(r).iter().cloned().collect()
}

fn inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

/// Circulant filtering on a periodic record.
#[derive(Clone, Debug)]
pub struct Exercise1 {
    pub n_t: usize,
    pub order: usize,
    /// Normalized lowpass cutoff.
    pub cutoff: f64,
    pub n_signals: usize,
    pub seed: u64,
}

impl Default for Exercise1 {
    fn default() -> Self {
        Exercise1 {
            n_t: 1024,
            order: 211,
            cutoff: 0.1,
            n_signals: 8,
            seed: 1,
        }
    }
}

pub fn exercise1(p: &Exercise1) -> Result<ExerciseReport> {
    let start = Instant::now();
    let mut rep = ExerciseReport::new("exercise1: circulant diagonalization");
    let n = p.n_t;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let d = random_matrix(&mut rng, p.n_signals, n);

    let psi_f = fourier_basis(n)?.columns().clone();
    let by_matrix = matmul(&to_complex(&d), &psi_f.map(|z| z.conj()));
    let by_fft = spectral::rows_analysis(&d);
    rep.check(
        "matrix DFT vs FFT (max rel)",
        max_abs(&(&by_matrix - &by_fft)) / max_abs(&by_fft),
        Bound::Below,
        1e-10,
    );

    let h = design_fir(FilterKind::Lowpass, &[p.cutoff], p.order, Window::Hamming)?;
    let c = circulant(&h, n)?;
    let dense = c.dense();
    let data = DataMatrix::from_matrix(d.clone(), 1.0)?;
    let masked = filter_rows(&data, &h)?;
    let convolved = &d * dense.transpose();
    rep.check(
        "circulant convolution vs frequency masking (max rel)",
        (masked.values() - &convolved).amax() / convolved.amax(),
        Bound::Below,
        1e-10,
    );
    let row0: Vec<f64> = d.row(0).iter().cloned().collect();
    let applied = c.apply(&row0)?;
    let apply_err = applied.iter().zip(convolved.row(0).iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    rep.check("operator apply vs dense product (max abs)", apply_err, Bound::Below, 1e-10);

    let eig = diagonalize_circulant(&c)?;
    let mut scaled = psi_f.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= eig[j];
    }
    let recon = matmul(&scaled, &psi_f.adjoint());
    let dense_c = to_complex(&dense);
    rep.check(
        "||C_h - Psi_F H conj(Psi_F)||_F / ||C_h||_F",
        (&dense_c - recon).norm() / dense_c.norm(),
        Bound::Below,
        1e-10,
    );
    let max_eig = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    rep.check(
        "eigenvalue imaginary parts (max rel)",
        eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / max_eig,
        Bound::Below,
        1e-10,
    );
    let first: Vec<C64> = c.first_column().iter().map(|&x| C64::new(x, 0.0)).collect();
    let dft = spectral::dft_unnormalized(&first);
    rep.check(
        "eigenvalues vs DFT of zero-phase taps (max abs)",
        eig.iter().zip(&dft).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
        Bound::Below,
        1e-10,
    );
    let resp = h.response(n)?;
    rep.check(
        "stop-band attenuation (dB)",
        stop_band_attenuation_db(&resp, &h.stop_band(n)),
        Bound::AtLeast,
        50.0,
    );
    rep.elapsed = start.elapsed();
    Ok(rep)
}

/// Pulsating Poiseuille flow: eigenfunction expansion against DFT, POD
/// and DMD.
#[derive(Clone, Debug, Default)]
pub struct Exercise2 {
    pub params: PoiseuilleParams,
    /// Directory for the amplitude-decay curves and mode files.
    pub out: Option<PathBuf>,
    /// Modes written per decomposition.
    pub export_modes: usize,
}

fn decay_rows(name: &str, dec: &Decomposition, scale: f64) -> Vec<String> {
    descending_order(&dec.sigma)
        .iter()
        .enumerate()
        .map(|(r, &i)| format!("{name},{r},{:.16e},{:.16e}", dec.sigma[i], dec.sigma[i] / scale))
        .collect()
}

pub fn exercise2(p: &Exercise2) -> Result<ExerciseReport> {
    let start = Instant::now();
    let mut rep = ExerciseReport::new("exercise2: pulsating Poiseuille flow");
    let q = &p.params;
    let d = poiseuille_dataset(q)?;
    rep.notes.push(format!("dataset {}×{}", d.n_s(), d.n_t()));

    let (_, s, _) = svd_thin(d.values());
    let tol = d.n_s().max(d.n_t()) as f64 * f64::EPSILON * s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > tol).count();
    rep.check("numerical rank", rank as f64, Bound::AtMost, q.n_modes as f64);

    let pod_dec = pod(&d)?;
    let kept = pod_dec.truncated(q.n_modes);
    let back = reconstruct(&kept, kept.rank())?;
    rep.check(
        format!("POD {}-mode reconstruction (rel Frobenius)", q.n_modes),
        (back - d.values()).norm() / d.values().norm(),
        Bound::Below,
        1e-8,
    );
    let eigen = poiseuille_modes(q)?;
    rep.check(
        "POD leading amplitude / eigenfunction leading amplitude",
        pod_dec.sigma[0] / eigen.sigma[0],
        Bound::AtLeast,
        1.0 - 1e-12,
    );

    let dft_dec = dft_decomposition(&d)?;
    let dmd_dec = dmd(&d, None)?;

    let eig = dmd_eigenvalues(&d, None)?;
    let drive = 1.0 / (2.0 * PI);
    let modulus = eig.moduli.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    let freq = eig
        .frequencies(q.f_s_hat)
        .iter()
        .map(|f| (f.abs() - drive).abs())
        .fold(0.0, f64::max);
    rep.notes.push(format!("DMD rank {} with eigenvalues {:?}", eig.rank, eig.lambdas));
    rep.check("DMD eigenvalue | |lambda| - 1 | (max)", modulus, Bound::Below, 1e-6);
    rep.check("DMD frequency - driving frequency (max abs)", freq, Bound::Below, 1e-6);

    if let Some(out) = &p.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let scale = ((d.n_s() * d.n_t()) as f64).sqrt();
        let mut lines = vec!["method,index,sigma,sigma_hat".to_string()];
        for (name, dec) in [("pod", &pod_dec), ("dft", &dft_dec), ("dmd", &dmd_dec), ("eigenfunction", &eigen)] {
            lines.extend(decay_rows(name, dec, scale));
        }
        let path = out.join("amplitude_decay.csv");
        fs::write(&path, lines.join("\n") + "\n").map_err(|e| Error::io(&path, e))?;
        let written = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?.lines().count() - 1;
        let expected = pod_dec.rank() + dft_dec.rank() + dmd_dec.rank() + eigen.rank();
        rep.check("amplitude-decay rows exported", written as f64, Bound::AtLeast, expected as f64);
        rep.artifacts.push(path);
        for (name, dec) in [("pod", &pod_dec), ("dft", &dft_dec), ("dmd", &dmd_dec)] {
            let dir = out.join(name);
            save_decomposition(dec, &d, &dir, p.export_modes)?;
            rep.artifacts.push(dir);
        }
    }
    rep.elapsed = start.elapsed();
    Ok(rep)
}

/// Two windowed forcings separated by a highpass filter.
#[derive(Clone, Debug)]
pub struct Exercise3 {
    pub n_y: usize,
    pub n_t: usize,
    pub f_s_hat: f64,
    pub w1: f64,
    pub w2: f64,
    /// Gain of the second forcing's envelope.
    pub gain2: f64,
    /// Normalized highpass cutoff.
    pub cutoff: f64,
    pub order: usize,
    pub out: Option<PathBuf>,
}

impl Default for Exercise3 {
    fn default() -> Self {
        Exercise3 {
            n_y: 500,
            n_t: 600,
            f_s_hat: 10.0,
            w1: 1.0,
            w2: 4.0,
            gain2: 6.0,
            cutoff: 0.1,
            order: 101,
            out: None,
        }
    }
}

pub fn exercise3(p: &Exercise3) -> Result<ExerciseReport> {
    let start = Instant::now();
    let mut rep = ExerciseReport::new("exercise3: scale separation by filtering");
    let params = PoiseuilleParams {
        womersley: p.w1,
        p_hat_a: 1.0,
        n_y: p.n_y,
        n_t: p.n_t,
        f_s_hat: p.f_s_hat,
        n_modes: 10,
    };
    let e1 = Envelope::first_half(p.n_t, 1.0);
    let e2 = Envelope::second_half(p.n_t, p.gain2);
    let tf = two_forcing_dataset(p.w1, p.w2, [&e1, &e2], &params)?;
    let d = &tf.combined;
    let split_hz = p.cutoff * p.f_s_hat;
    rep.notes.push(format!(
        "forcing frequencies {:.4} and {:.4}, split at {split_hz}",
        tf.frequencies[0], tf.frequencies[1]
    ));

    let plain = pod(d)?;
    let spec = spectral::analysis(&column(&plain.psi, 0));
    let (mut lo, mut hi) = (0.0, 0.0);
    for (k, z) in spec.iter().enumerate() {
        if spectral::folded_frequency(k, p.n_t, p.f_s_hat) < split_hz {
            lo += z.norm_sqr();
        } else {
            hi += z.norm_sqr();
        }
    }
    rep.check("plain POD mode 1 energy below split", lo / (lo + hi), Bound::AtLeast, 0.1);
    rep.check("plain POD mode 1 energy above split", hi / (lo + hi), Bound::AtLeast, 0.1);

    let h = design_fir(FilterKind::Highpass, &[p.cutoff], p.order, Window::Hamming)?;
    let resp = h.response(p.n_t)?;
    let dh = filter_rows(d, &h)?;
    let filtered = pod(&dh)?;
    let k = d.values().tr_mul(d.values());
    let (lam, vecs) = sym_eig_desc(&filter_correlation_response(&k, &resp)?.k_h);
    let s1 = filtered.sigma[0];
    let sigma_dev = (0..filtered.rank())
        .map(|r| (filtered.sigma[r] - lam[r].max(0.0).sqrt()).abs() / s1)
        .fold(0.0, f64::max);
    rep.check("filter-data vs filter-correlation amplitudes (max rel to sigma_1)", sigma_dev, Bound::Below, 1e-6);
    // modes above the noise floor whose amplitudes are not near-ties
    let sig = &filtered.sigma;
    let resolved: Vec<usize> = (0..filtered.rank())
        .filter(|&r| sig[r] >= 1e-4 * s1)
        .filter(|&r| (r == 0 || sig[r - 1] - sig[r] > 1e-3 * sig[r]) && (r + 1 >= sig.len() || sig[r] - sig[r + 1] > 1e-3 * sig[r]))
        .collect();
    let worst_ip = resolved
        .iter()
        .map(|&r| {
            let v: Vec<C64> = vecs.column(r).iter().map(|&x| C64::new(x, 0.0)).collect();
            inner(&column(&filtered.psi, r), &v)
        })
        .fold(1.0, f64::min);
    rep.notes.push(format!("{} resolved filtered modes compared", resolved.len()));
    rep.check("filter-data vs filter-correlation modes (min |<psi, psi>|)", worst_ip, Bound::Above, 0.999);

    let reference = pod(&tf.f2_only)?;
    rep.check(
        "filtered POD mode 1 vs forcing-2-only POD mode 1 |<psi, psi_ref>|",
        inner(&column(&filtered.psi, 0), &column(&reference.psi, 0)),
        Bound::Above,
        0.99,
    );

    let stop = h.stop_band(p.n_t);
    let rho = stop_band_power_ratio(&resp, &stop);
    let dn2 = spectral_norm(d.values()).powi(2);
    let leak = (0..filtered.rank())
        .map(|r| filtered.sigma[r].powi(2) * stop_band_fraction(&column(&filtered.psi, r), &stop) / dn2)
        .fold(0.0, f64::max);
    rep.check("filtered POD stop-band energy (max over modes)", leak, Bound::AtMost, rho + 1e-8);

    let split = FrequencySplitting::from_edges(&[split_hz], p.f_s_hat)?;
    let m = mpod(d, &split, p.order, BankMode::Fir)?;
    let lead_high = m.scale_of_mode.iter().position(|&s| s == 1);
    let ip = lead_high.map_or(0.0, |r| inner(&column(&m.decomposition.psi, r), &column(&reference.psi, 0)));
    rep.check(
        "mPOD leading high-scale mode vs forcing-2-only POD mode 1",
        ip,
        Bound::Above,
        0.99,
    );

    if let Some(out) = &p.out {
        for (name, dec, data) in [("pod", &plain, d), ("filtered_pod", &filtered, &dh)] {
            let dir = out.join(name);
            save_decomposition(dec, data, &dir, 4)?;
            rep.artifacts.push(dir);
        }
        let dir = out.join("mpod");
        super::export::save_mpod(&m, d, &dir, 4)?;
        rep.artifacts.push(dir);
    }
    rep.elapsed = start.elapsed();
    Ok(rep)
}

/// Multiscale POD properties.
#[derive(Clone, Debug)]
pub struct Exercise4 {
    pub n_s: usize,
    pub n_t: usize,
    pub fir_order: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for Exercise4 {
    fn default() -> Self {
        Exercise4 {
            n_s: 96,
            n_t: 512,
            fir_order: 101,
            seed: 4,
            out: None,
        }
    }
}

/// Three planted harmonics on random spatial structures plus noise.
fn harmonic_data(rng: &mut ChaCha8Rng, n_s: usize, n_t: usize, noise: f64) -> Result<DataMatrix> {
    let mut values = random_matrix(rng, n_s, n_t) * noise;
    for (amp, bin) in [(3.0, 0.02), (2.0, 0.11), (1.0, 0.31)] {
        let f = (bin * n_t as f64).round() / n_t as f64;
        let phase: Vec<f64> = (0..n_s).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let shape: Vec<f64> = (0..n_s).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in 0..n_s {
            for k in 0..n_t {
                values[(i, k)] += amp * shape[i] * (2.0 * PI * f * k as f64 + phase[i]).cos();
            }
        }
    }
    DataMatrix::from_matrix(values, 1.0)
}

pub fn exercise4(p: &Exercise4) -> Result<ExerciseReport> {
    let start = Instant::now();
    let mut rep = ExerciseReport::new("exercise4: multiscale POD");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let d = harmonic_data(&mut rng, p.n_s, p.n_t, 0.05)?;

    let split = FrequencySplitting::from_edges(&[0.05, 0.2], 1.0)?;
    let m = mpod(&d, &split, p.fir_order, BankMode::Fir)?;
    let psi = m.decomposition.psi.map(|z| z.re);
    let n = psi.ncols();
    rep.check(
        "Psi_M^T Psi_M - I (max abs)",
        (psi.tr_mul(&psi) - RMatrix::identity(n, n)).amax(),
        Bound::Below,
        1e-10,
    );
    let plain = pod(&d)?;
    let (mut sm, mut sp, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
    for r in 0..m.decomposition.rank() {
        sm += m.decomposition.sigma[r].powi(2);
        sp += plain.sigma.get(r).map_or(0.0, |s| s * s);
        worst = worst.max((sm - sp) / sp);
    }
    rep.check("partial sums mPOD - POD (max rel)", worst, Bound::AtMost, 1e-12);
    let energies = crate::mpod::scale_energies(&m);
    rep.notes.push(format!(
        "three-scale energies {:?}, discarded {:.3e}",
        energies.per_band, energies.discarded
    ));

    let single = mpod(&d, &FrequencySplitting::from_edges(&[], 1.0)?, p.fir_order, BankMode::Fir)?;
    let sd = &single.decomposition;
    let mut sigma_err: f64 = if sd.rank() == plain.rank() { 0.0 } else { f64::INFINITY };
    let mut angle: f64 = 0.0;
    for r in 0..sd.rank().min(plain.rank()) {
        sigma_err = sigma_err.max((sd.sigma[r] - plain.sigma[r]).abs() / plain.sigma[r]);
        angle = angle.max(inner(&column(&sd.psi, r), &column(&plain.psi, r)).min(1.0).acos());
    }
    rep.check("single-scale mPOD vs POD amplitudes (max rel)", sigma_err, Bound::Below, 1e-8);
    rep.check("single-scale mPOD vs POD principal angle (max rad)", angle, Bound::Below, 1e-6);

    let tall = DataMatrix::from_matrix(random_matrix(&mut rng, 2 * p.n_t / 3 + p.n_t, p.n_t / 2), 1.0)?;
    let ideal = mpod(&tall, &FrequencySplitting::from_edges(&[0.1, 0.25], 1.0)?, p.fir_order, BankMode::Ideal)?;
    let back = reconstruct(&ideal.decomposition, ideal.decomposition.rank())?;
    rep.check(
        "contiguous ideal bank full-rank reconstruction (rel Frobenius)",
        (back - tall.values()).norm() / tall.values().norm(),
        Bound::Below,
        1e-8,
    );

    let n_per = p.n_t / 4;
    let periodic = harmonic_data(&mut rng, p.n_s / 2, n_per, 0.2)?;
    let per_bin = mpod(&periodic, &FrequencySplitting::per_bin(n_per, 1.0)?, 1, BankMode::Ideal)?;
    let pd = &per_bin.decomposition;
    let mut min_pair: f64 = 1.0;
    for r in (0..pd.rank()).filter(|&r| !pd.degenerate[r]) {
        let spec = spectral::analysis(&column(&pd.psi, r));
        let best = (0..=n_per / 2)
            .map(|b| spec[b].norm_sqr() + if b != 0 && b != n_per - b { spec[n_per - b].norm_sqr() } else { 0.0 })
            .fold(0.0, f64::max);
        min_pair = min_pair.min(best);
    }
    rep.check("per-bin mPOD single bin-pair energy (min over modes)", min_pair, Bound::AtLeast, 0.99);

    if let Some(out) = &p.out {
        let dir = out.join("mpod");
        super::export::save_mpod(&m, &d, &dir, 6)?;
        rep.artifacts.push(dir);
        let dir = out.join("pod");
        save_decomposition(&plain, &d, &dir, 6)?;
        rep.artifacts.push(dir);
    }
    rep.notes.extend(m.notes.iter().cloned());
    rep.elapsed = start.elapsed();
    Ok(rep)
}
