//! Analytic datasets: the pulsating Poiseuille flow between two plates, its
//! two-forcing variant, and planted-mode generators with known ground truth.
//!
//! Poiseuille quantities are dimensionless: `ŷ ∈ [−1, 1]` across the
//! channel, time `t̂` in units of the inverse forcing pulsation.

use std::f64::consts::PI;

use crate::datamatrix::{DataMatrix, GridMeta};
use crate::factorize::{Decomposition, DecompositionKind};
use crate::{CMatrix, Error, RMatrix, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct PoiseuilleParams {
    /// Womersley number `W > 0`.
    pub womersley: f64,
    /// Forcing amplitude `p̂_A`.
    pub p_hat_a: f64,
    pub n_y: usize,
    pub n_t: usize,
    /// Samples per unit `t̂`.
    pub f_s_hat: f64,
    /// Eigenfunctions kept in the expansion.
    pub n_modes: usize,
}

impl Default for PoiseuilleParams {
    fn default() -> Self {
        PoiseuilleParams {
            womersley: 10.0,
            p_hat_a: 60.0,
            n_y: 2000,
            n_t: 200,
            f_s_hat: 10.0,
            n_modes: 10,
        }
    }
}

impl PoiseuilleParams {
    fn validate(&self) -> Result<()> {
        if !(self.womersley > 0.0 && self.womersley.is_finite()) {
            return Err(Error::Domain(format!("Womersley number must be > 0, got {}", self.womersley)));
        }
        if !(self.f_s_hat > 0.0 && self.f_s_hat.is_finite()) {
            return Err(Error::Domain("sampling frequency must be > 0".into()));
        }
        if self.n_y == 0 || self.n_t == 0 || self.n_modes == 0 {
            return Err(Error::Domain("n_y, n_t and n_modes must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Uniform grid on `[−1, 1]` including both walls.
    pub fn y_grid(&self) -> Vec<f64> {
        if self.n_y == 1 {
            return vec![0.0];
        }
        (0..self.n_y).map(|i| -1.0 + 2.0 * i as f64 / (self.n_y - 1) as f64).collect()
    }

    /// `t̂_k = k / f̂_s`.
    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_t).map(|k| k as f64 / self.f_s_hat).collect()
    }

    fn meta(&self) -> Result<GridMeta> {
        let dy = if self.n_y > 1 { 2.0 / (self.n_y - 1) as f64 } else { 1.0 };
        GridMeta::new(1, self.n_y, 1, dy, self.f_s_hat)
    }
}

/// `φ_n(ŷ) = cos((2n−1)πŷ/2)`; vanishes at `ŷ = ±1`.
pub fn spatial_eigenfunction(n: usize, y: f64) -> f64 {
    // exact zero at the walls, where cos of an odd multiple of π/2 rounds
    if y.abs() == 1.0 {
        return 0.0;
    }
    ((2 * n - 1) as f64 * PI / 2.0 * y).cos()
}

/// `σ_n = 16 p̂_A / ((2n−1)π √(16W⁴ + (2n−1)⁴π⁴))`.
pub fn eigen_amplitude(n: usize, womersley: f64, p_hat_a: f64) -> f64 {
    let m = (2 * n - 1) as f64;
    16.0 * p_hat_a / (m * PI * (16.0 * womersley.powi(4) + m.powi(4) * PI.powi(4)).sqrt())
}

/// Phase lag `atan((W/((2n−1)π))²)`.
pub fn eigen_phase(n: usize, womersley: f64) -> f64 {
    (womersley / ((2 * n - 1) as f64 * PI)).powi(2).atan()
}

/// `ψ_n(t̂) = (−1)ⁿ cos(t̂ − atan((W/((2n−1)π))²))`.
pub fn temporal_eigenfunction(n: usize, womersley: f64, t: f64) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (t - eigen_phase(n, womersley)).cos()
}

/// Eigenfunction expansion sampled on the grid, columns unit-normalized
/// with the norms folded into the amplitudes. Modes are sorted by
/// amplitude; `order[r]` is `n − 1`.
pub fn poiseuille_modes(p: &PoiseuilleParams) -> Result<Decomposition> {
    p.validate()?;
    let ys = p.y_grid();
    let ts = p.t_grid();
    let mut phi = CMatrix::zeros(p.n_y, p.n_modes);
    let mut psi = CMatrix::zeros(p.n_t, p.n_modes);
    let mut sigma = Vec::with_capacity(p.n_modes);
    for r in 0..p.n_modes {
        let n = r + 1;
        let fy: Vec<f64> = ys.iter().map(|&y| spatial_eigenfunction(n, y)).collect();
        let ft: Vec<f64> = ts.iter().map(|&t| temporal_eigenfunction(n, p.womersley, t)).collect();
        let ny = fy.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nt = ft.iter().map(|x| x * x).sum::<f64>().sqrt();
        // a lone wall sample makes φ vanish identically; keep it as zero
        for (i, v) in fy.iter().enumerate() {
            phi[(i, r)] = C64::new(if ny > 0.0 { v / ny } else { 0.0 }, 0.0);
        }
        for (k, v) in ft.iter().enumerate() {
            psi[(k, r)] = C64::new(v / nt, 0.0);
        }
        sigma.push(eigen_amplitude(n, p.womersley, p.p_hat_a) * ny * nt);
    }
    let dec = Decomposition::new(phi, sigma, psi, DecompositionKind::Eigenfunction)?;
    Ok(dec.sorted_view())
}

fn expansion(p: &PoiseuilleParams, womersley: f64, time_scale: f64, envelope: impl Fn(usize) -> f64) -> RMatrix {
    let ys = p.y_grid();
    let ts = p.t_grid();
    let mut d = RMatrix::zeros(p.n_y, p.n_t);
    for n in 1..=p.n_modes {
        let s = eigen_amplitude(n, womersley, p.p_hat_a);
        let fy: Vec<f64> = ys.iter().map(|&y| spatial_eigenfunction(n, y)).collect();
        for (k, &t) in ts.iter().enumerate() {
            let a = s * envelope(k) * temporal_eigenfunction(n, womersley, time_scale * t);
            if a == 0.0 {
                continue;
            }
            for (i, f) in fy.iter().enumerate() {
                d[(i, k)] += a * f;
            }
        }
    }
    d
}

/// Velocity profiles `û(ŷ_i, t̂_k)` from the truncated expansion.
pub fn poiseuille_dataset(p: &PoiseuilleParams) -> Result<DataMatrix> {
    p.validate()?;
    DataMatrix::new(expansion(p, p.womersley, 1.0, |_| 1.0), p.meta()?)
}

/// Index of the grid point nearest the centreline `ŷ = 0`.
pub fn centerline_index(n_y: usize) -> usize {
    n_y / 2
}

/// Raised-cosine (Tukey) envelope over samples `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub start: usize,
    pub end: usize,
    /// Fraction of the support used by each cosine ramp, in `[0, 0.5]`.
    pub taper: f64,
    pub gain: f64,
}

impl Envelope {
    pub fn value(&self, k: usize) -> f64 {
        if k < self.start || k >= self.end {
            return 0.0;
        }
        let len = (self.end - self.start) as f64;
        let ramp = self.taper * len;
        let x = (k - self.start) as f64 + 0.5;
        let w = if ramp > 0.0 && x < ramp {
            0.5 - 0.5 * (PI * x / ramp).cos()
        } else if ramp > 0.0 && len - x < ramp {
            0.5 - 0.5 * (PI * (len - x) / ramp).cos()
        } else {
            1.0
        };
        self.gain * w
    }

    /// First half of an `n_t` record, 10% taper.
    pub fn first_half(n_t: usize, gain: f64) -> Self {
        Envelope {
            start: 0,
            end: n_t / 2,
            taper: 0.1,
            gain,
        }
    }

    /// Second half of an `n_t` record, 10% taper.
    pub fn second_half(n_t: usize, gain: f64) -> Self {
        Envelope {
            start: n_t / 2,
            end: n_t,
            taper: 0.1,
            gain,
        }
    }
}

/// Combined two-forcing response with each forcing's contribution.
#[derive(Clone, Debug)]
pub struct TwoForcing {
    pub combined: DataMatrix,
    pub f1_only: DataMatrix,
    pub f2_only: DataMatrix,
    /// Forcing frequencies in cycles per unit `t̂`.
    pub frequencies: [f64; 2],
}

/// Sum of two windowed pulsations with Womersley numbers `w1` and `w2`.
///
/// With fixed geometry and fluid, `W² ∝ ω`, so the second forcing pulsates
/// `(w2/w1)²` times faster; time is measured in units of the first
/// forcing's `1/ω`. Each response is the periodic solution of its forcing
/// modulated by its envelope.
pub fn two_forcing_dataset(w1: f64, w2: f64, windows: [&Envelope; 2], p: &PoiseuilleParams) -> Result<TwoForcing> {
    let mut q = p.clone();
    q.womersley = w1;
    q.validate()?;
    if !(w2 > 0.0 && w2.is_finite()) {
        return Err(Error::Domain(format!("Womersley number must be > 0, got {w2}")));
    }
    for (i, w) in windows.iter().enumerate() {
        if w.start > w.end || w.end > p.n_t || !(0.0..=0.5).contains(&w.taper) {
            return Err(Error::Domain(format!(
                "window {i} [{}, {}) with taper {} does not fit a record of {} samples",
                w.start, w.end, w.taper, p.n_t
            )));
        }
    }
    let ratio = (w2 / w1).powi(2);
    let meta = q.meta()?;
    let f1 = expansion(&q, w1, 1.0, |k| windows[0].value(k));
    let f2 = expansion(&q, w2, ratio, |k| windows[1].value(k));
    let combined = &f1 + &f2;
    Ok(TwoForcing {
        combined: DataMatrix::new(combined, meta.clone())?,
        f1_only: DataMatrix::new(f1, meta.clone())?,
        f2_only: DataMatrix::new(f2, meta)?,
        frequencies: [1.0 / (2.0 * PI), ratio / (2.0 * PI)],
    })
}

/// Temporal shape of a planted mode, in samples.
#[derive(Clone, Debug, PartialEq)]
pub enum TemporalShape {
    /// `cos(2π f k + phase)`, `f` in cycles per sample.
    Harmonic { frequency: f64, phase: f64 },
    /// `Re(λᵏ e^{j·phase}) = |λ|ᵏ cos(k·arg λ + phase)`.
    Pole { lambda: C64, phase: f64 },
    Samples(Vec<f64>),
}

impl TemporalShape {
    fn sample(&self, n_t: usize) -> Result<Vec<f64>> {
        Ok(match self {
            TemporalShape::Harmonic { frequency, phase } => (0..n_t)
                .map(|k| (2.0 * PI * frequency * k as f64 + phase).cos())
                .collect(),
            TemporalShape::Pole { lambda, phase } => (0..n_t)
                .map(|k| lambda.norm().powi(k as i32) * (lambda.arg() * k as f64 + phase).cos())
                .collect(),
            TemporalShape::Samples(v) => {
                if v.len() != n_t {
                    return Err(Error::Shape(format!("temporal samples have length {}, expected {n_t}", v.len())));
                }
                v.clone()
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedMode {
    pub sigma: f64,
    pub shape: Vec<f64>,
    pub temporal: TemporalShape,
}

/// Planted data and its exact factorization.
#[derive(Clone, Debug)]
pub struct Planted {
    pub data: DataMatrix,
    /// Unit-normalized structures with the given amplitudes, in input order.
    pub truth: Decomposition,
}

/// `D = Σ σ_r φ_r ψ_rᵀ` with both structures normalized to unit length.
pub fn planted_modes(n_s: usize, n_t: usize, f_s: f64, modes: &[PlantedMode]) -> Result<Planted> {
    let mut phi = CMatrix::zeros(n_s, modes.len());
    let mut psi = CMatrix::zeros(n_t, modes.len());
    let mut d = RMatrix::zeros(n_s, n_t);
    for (r, m) in modes.iter().enumerate() {
        if m.shape.len() != n_s {
            return Err(Error::Shape(format!("mode {r} shape has length {}, expected {n_s}", m.shape.len())));
        }
        let t = m.temporal.sample(n_t)?;
        let ns = m.shape.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nt = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if ns == 0.0 || nt == 0.0 {
            return Err(Error::Degenerate(format!("mode {r} has a zero structure")));
        }
        for i in 0..n_s {
            phi[(i, r)] = C64::new(m.shape[i] / ns, 0.0);
        }
        for k in 0..n_t {
            psi[(k, r)] = C64::new(t[k] / nt, 0.0);
        }
        for k in 0..n_t {
            let a = m.sigma * t[k] / nt;
            for i in 0..n_s {
                d[(i, k)] += a * m.shape[i] / ns;
            }
        }
    }
    Ok(Planted {
        data: DataMatrix::from_matrix(d, f_s)?,
        truth: Decomposition::new(phi, modes.iter().map(|m| m.sigma).collect(), psi, DecompositionKind::Custom)?,
    })
}
