//! FIR design, circulant convolution and frequency-constrained correlation.
//!
//! Filtering is periodic throughout: a kernel acts on a record of `n_t`
//! samples as the circulant matrix `C_h`, diagonalized by the Fourier basis
//! with eigenvalues `Ĥ`. Filtering the rows of `D` maps the temporal
//! correlation `K = DᵀD` to `K_H = C_h K C_hᵀ`, which is evaluated in the
//! frequency domain without forming the filtered data.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::datamatrix::DataMatrix;
use crate::{spectral, CMatrix, Error, RMatrix, Result, C64};

/// Relative tolerance of the circulant eigen-identity check.
pub const CIRCULANT_TOL: f64 = 1e-10;
/// Relative asymmetry tolerated in a correlation matrix.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Hamming,
    Hann,
    Rect,
}

impl Window {
    fn weight(self, k: usize, n: usize) -> f64 {
        if n == 1 {
            return 1.0;
        }
        let x = 2.0 * PI * k as f64 / (n - 1) as f64;
        match self {
            Window::Hamming => 0.54 - 0.46 * x.cos(),
            Window::Hann => 0.5 - 0.5 * x.cos(),
            Window::Rect => 1.0,
        }
    }

    /// Approximate transition width in cycles per sample for `n` taps.
    pub fn transition_width(self, n: usize) -> f64 {
        let c = match self {
            Window::Hamming => 3.3,
            Window::Hann => 3.1,
            Window::Rect => 0.9,
        };
        c / n as f64
    }
}

impl std::str::FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(Window::Hamming),
            "hann" | "hanning" => Ok(Window::Hann),
            "rect" | "rectangular" | "boxcar" => Ok(Window::Rect),
            other => Err(Error::Config(format!("unknown window '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
}

impl std::str::FromStr for FilterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lowpass" | "low" => Ok(FilterKind::Lowpass),
            "highpass" | "high" => Ok(FilterKind::Highpass),
            "bandpass" | "band" => Ok(FilterKind::Bandpass),
            other => Err(Error::Config(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// Linear-phase FIR kernel with an odd number of symmetric taps.
#[derive(Clone, Debug, PartialEq)]
pub struct FirKernel {
    taps: Vec<f64>,
    /// Normalized cutoffs in cycles per sample.
    cutoffs: Vec<f64>,
    window: Window,
    kind: FilterKind,
}

impl FirKernel {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.cutoffs
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.taps.len()
    }

    /// Circulant eigenvalues `Ĥ` on a record of `n_t` samples.
    pub fn response(&self, n_t: usize) -> Result<Vec<C64>> {
        Ok(circulant(self, n_t)?.eigenvalues())
    }

    /// Bins of an `n_t`-point record in the stop band, excluding the
    /// transition region.
    pub fn stop_band(&self, n_t: usize) -> Vec<bool> {
        let half = 0.5 * self.window.transition_width(self.order());
        (0..n_t)
            .map(|k| {
                let f = spectral::folded_frequency(k, n_t, 1.0);
                match self.kind {
                    FilterKind::Lowpass => f >= self.cutoffs[0] + half,
                    FilterKind::Highpass => f <= self.cutoffs[0] - half,
                    FilterKind::Bandpass => f <= self.cutoffs[0] - half || f >= self.cutoffs[1] + half,
                }
            })
            .collect()
    }
}

fn lowpass_taps(fc: f64, n: usize, window: Window) -> Vec<f64> {
    let m = n / 2;
    // evaluate the right half and mirror it, so the taps are exactly symmetric
    let mut taps: Vec<f64> = (0..n)
        .map(|k| {
            let k = k.max(n - 1 - k);
            let x = (k - m) as f64;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            sinc * window.weight(k, n)
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Windowed-sinc design. Highpass is `δ − lowpass`; bandpass is
/// `lowpass(f₂) − lowpass(f₁)`.
pub fn design_fir(kind: FilterKind, cutoffs: &[f64], order: usize, window: Window) -> Result<FirKernel> {
    if order.is_multiple_of(2) {
        return Err(Error::Domain(format!("FIR order must be odd, got {order}")));
    }
    let expected = if kind == FilterKind::Bandpass { 2 } else { 1 };
    if cutoffs.len() != expected {
        return Err(Error::Domain(format!(
            "{kind:?} needs {expected} cutoff(s), got {}",
            cutoffs.len()
        )));
    }
    if cutoffs.iter().any(|&f| !(f > 0.0 && f < 0.5)) {
        return Err(Error::Domain(format!("cutoffs must lie in (0, 0.5), got {cutoffs:?}")));
    }
    if kind == FilterKind::Bandpass && cutoffs[0] >= cutoffs[1] {
        return Err(Error::Domain(format!(
            "bandpass cutoffs must increase, got {cutoffs:?}"
        )));
    }
    let taps = match kind {
        FilterKind::Lowpass => lowpass_taps(cutoffs[0], order, window),
        FilterKind::Highpass => {
            let mut t: Vec<f64> = lowpass_taps(cutoffs[0], order, window).iter().map(|x| -x).collect();
            t[order / 2] += 1.0;
            t
        }
        FilterKind::Bandpass => {
            let lo = lowpass_taps(cutoffs[0], order, window);
            let hi = lowpass_taps(cutoffs[1], order, window);
            hi.iter().zip(&lo).map(|(h, l)| h - l).collect()
        }
    };
    Ok(FirKernel {
        taps,
        cutoffs: cutoffs.to_vec(),
        window,
        kind,
    })
}

/// Kernel from explicit taps (odd count). Symmetry is not required, but
/// only symmetric taps give a real spectrum.
pub fn kernel_from_taps(taps: Vec<f64>, kind: FilterKind) -> Result<FirKernel> {
    if taps.len().is_multiple_of(2) {
        return Err(Error::Domain("kernel must have an odd number of taps".into()));
    }
    if taps.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("kernel taps".into()));
    }
    Ok(FirKernel {
        taps,
        cutoffs: Vec::new(),
        window: Window::Rect,
        kind,
    })
}

/// Circular convolution on `n` samples with the kernel centre at index 0.
#[derive(Clone, Debug)]
pub struct CirculantOperator {
    first_column: Vec<f64>,
    symmetric: bool,
}

/// `C_h` for a record of `n_t` samples.
pub fn circulant(h: &FirKernel, n_t: usize) -> Result<CirculantOperator> {
    let n_taps = h.taps.len();
    if n_taps > n_t {
        return Err(Error::Domain(format!(
            "kernel of {n_taps} taps longer than the record of {n_t} samples"
        )));
    }
    let m = n_taps / 2;
    let mut c = vec![0.0; n_t];
    for (k, &t) in h.taps.iter().enumerate() {
        c[(k + n_t - m) % n_t] += t;
    }
    let symmetric = (0..n_taps).all(|k| h.taps[k] == h.taps[n_taps - 1 - k]);
    Ok(CirculantOperator {
        first_column: c,
        symmetric,
    })
}

impl CirculantOperator {
    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    pub fn len(&self) -> usize {
        self.first_column.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_column.is_empty()
    }

    /// `y = C u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if u.len() != n {
            return Err(Error::Shape(format!("operator of size {n} applied to length {}", u.len())));
        }
        let nz: Vec<(usize, f64)> = self
            .first_column
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i, c))
            .collect();
        Ok((0..n)
            .map(|i| nz.iter().map(|&(m, c)| c * u[(i + n - m) % n]).sum())
            .collect())
    }

    /// Dense `C[i, j] = c[(i − j) mod n]`.
    pub fn dense(&self) -> RMatrix {
        let n = self.len();
        RMatrix::from_fn(n, n, |i, j| self.first_column[(i + n - j) % n])
    }

    /// Eigenvalues `Ĥ[k]`: the unnormalized DFT of the first column.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let c: Vec<C64> = self.first_column.iter().map(|&x| C64::new(x, 0.0)).collect();
        spectral::dft_unnormalized(&c)
    }
}

/// Eigenvalues of `C`, verified against `C = Ψ_F diag(Ĥ) Ψ̄_F`.
///
/// The product on the right is circulant for any `Ĥ`, so agreement of the
/// first columns implies agreement of the matrices. The synthesis uses the
/// explicit Fourier entries rather than an FFT.
pub fn diagonalize_circulant(c: &CirculantOperator) -> Result<Vec<C64>> {
    let h = c.eigenvalues();
    let n = c.len();
    let recon: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s: C64 = h
                .iter()
                .enumerate()
                .map(|(k, hk)| hk * C64::from_polar(1.0, 2.0 * PI * ((i * k) % n) as f64 / n as f64))
                .sum();
            (s / n as f64).re
        })
        .collect();
    let scale = c.first_column.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let err = recon
        .iter()
        .zip(&c.first_column)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if err > CIRCULANT_TOL * scale {
        return Err(Error::NumericalConsistency(format!(
            "circulant eigen-identity residual {err:e} exceeds {:e}",
            CIRCULANT_TOL * scale
        )));
    }
    if c.symmetric {
        let hmax = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let imax = h.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imax > CIRCULANT_TOL * hmax.max(1.0) {
            return Err(Error::NumericalConsistency(format!(
                "symmetric kernel has complex eigenvalues (max imaginary part {imax:e})"
            )));
        }
    }
    Ok(h)
}

/// Apply a frequency response to every row: `[(D Ψ̄_F) ⊙ Ĥ] Ψ_F`.
pub fn filter_rows_response(d: &DataMatrix, response: &[C64]) -> Result<DataMatrix> {
    if response.len() != d.n_t() {
        return Err(Error::Shape(format!(
            "response has {} bins, data has {} snapshots",
            response.len(),
            d.n_t()
        )));
    }
    let mut x = spectral::rows_analysis(d.values());
    for (k, mut col) in x.column_iter_mut().enumerate() {
        col *= response[k];
    }
    let y = spectral::rows_synthesis(&x).map(|z| z.re);
    d.with_values(y)
}

/// Filter every row of `D` with `h` under periodic extension.
pub fn filter_rows(d: &DataMatrix, h: &FirKernel) -> Result<DataMatrix> {
    filter_rows_response(d, &h.response(d.n_t())?)
}

fn check_symmetric(k: &RMatrix) -> Result<()> {
    if !k.is_square() {
        return Err(Error::Shape(format!("correlation matrix is {}×{}", k.nrows(), k.ncols())));
    }
    let scale = k.amax().max(f64::MIN_POSITIVE);
    let asym = (k - k.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Domain(format!("correlation matrix is not symmetric (residual {asym:e})")));
    }
    Ok(())
}

/// `K_F = Ψ_F K Ψ̄_F`.
pub fn cross_spectral_density(k: &RMatrix) -> Result<CMatrix> {
    check_symmetric(k)?;
    let left = spectral::cols_synthesis(&crate::linalg::to_complex(k));
    Ok(spectral::rows_analysis_complex(&left))
}

/// Filtered correlation and its filtered cross-spectral density.
#[derive(Clone, Debug)]
pub struct FilteredCorrelation {
    /// `K_H = Ψ̄_F K_FH Ψ_F`.
    pub k_h: RMatrix,
    /// `K_FH = K_F ⊙ (conj(Ĥ) Ĥᵀ)`.
    pub k_fh: CMatrix,
}

/// Correlation of the filtered data from the correlation of the raw data
/// and a frequency response.
pub fn filter_correlation_response(k: &RMatrix, response: &[C64]) -> Result<FilteredCorrelation> {
    if response.len() != k.nrows() {
        return Err(Error::Shape(format!(
            "response has {} bins, correlation matrix is {}×{}",
            response.len(),
            k.nrows(),
            k.ncols()
        )));
    }
    let mut k_fh = cross_spectral_density(k)?;
    let n = response.len();
    k_fh.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, col)| {
            let hj = response[j];
            for (i, z) in col.iter_mut().enumerate() {
                *z *= response[i].conj() * hj;
            }
        });
    let k_h = spectral::cols_analysis(&spectral::rows_synthesis(&k_fh));
    // the exact result is real and symmetric; symmetrize the rounding
    let re = k_h.map(|z| z.re);
    let k_h = (&re + re.transpose()) * 0.5;
    Ok(FilteredCorrelation { k_h, k_fh })
}

/// [`filter_correlation_response`] for an FIR kernel.
pub fn filter_correlation(k: &RMatrix, h: &FirKernel) -> Result<RMatrix> {
    Ok(filter_correlation_response(k, &h.response(k.nrows())?)?.k_h)
}

/// Residual of the identity `Ψ̄_F K_H Ψ̄_F = P_π K_FH`, relative to `‖K_FH‖`.
pub fn permutation_residual(fc: &FilteredCorrelation) -> f64 {
    let lhs = spectral::cols_analysis(&spectral::rows_analysis(&fc.k_h));
    let p = fourier_permutation(fc.k_fh.nrows());
    let n = p.len();
    let mut err = 0.0;
    for j in 0..n {
        for i in 0..n {
            err += (lhs[(i, j)] - fc.k_fh[(p[i], j)]).norm_sqr();
        }
    }
    err.sqrt() / fc.k_fh.norm().max(f64::MIN_POSITIVE)
}

/// Index reversal `k ↦ (n − k) mod n`: row `k` of `P_π` selects entry
/// `p[k]`. Equals `Ψ_F Ψ_F`.
pub fn fourier_permutation(n: usize) -> Vec<usize> {
    (0..n).map(|k| (n - k) % n).collect()
}

pub fn permutation_matrix(p: &[usize]) -> RMatrix {
    let n = p.len();
    RMatrix::from_fn(n, n, |i, j| if p[i] == j { 1.0 } else { 0.0 })
}

/// Implicit outer product `conj(Ĥ) Ĥᵀ` of a 1D response.
#[derive(Clone, Debug)]
pub struct TransferFunction2D {
    pub response_1d: Vec<C64>,
}

impl TransferFunction2D {
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.response_1d[i].conj() * self.response_1d[j]
    }

    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        self.response_1d[i].norm() * self.response_1d[j].norm()
    }
}

/// Largest power gain `|Ĥ|²` over the masked bins.
pub fn stop_band_power_ratio(response: &[C64], stop: &[bool]) -> f64 {
    response
        .iter()
        .zip(stop)
        .filter(|(_, &s)| s)
        .map(|(h, _)| h.norm_sqr())
        .fold(0.0, f64::max)
}

/// Fraction of the energy of `v` in the masked bins of its spectrum.
pub fn stop_band_fraction(v: &[C64], stop: &[bool]) -> f64 {
    let spec = spectral::analysis(v);
    let total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    spec.iter()
        .zip(stop)
        .filter(|(_, &s)| s)
        .map(|(z, _)| z.norm_sqr())
        .sum::<f64>()
        / total
}

/// Minimum stop-band attenuation in dB of a response over the masked bins.
pub fn stop_band_attenuation_db(response: &[C64], stop: &[bool]) -> f64 {
    -10.0 * stop_band_power_ratio(response, stop).log10()
}
