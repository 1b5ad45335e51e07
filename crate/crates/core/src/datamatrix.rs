//! The snapshot matrix and its energy diagnostics.
//!
//! Column `k` of a [`DataMatrix`] is the snapshot at time `t_k`; row `i` is
//! the time series at grid point `i`. Gridded fields are flattened
//! column-major per component, with the component blocks stacked one after
//! the other (all `u`, then all `v`).

use ndarray::Array3;

use crate::factorize::{Decomposition, DecompositionKind};
use crate::linalg::{spectral_norm, spectral_norm_complex, to_complex};
use crate::{CMatrix, Error, RMatrix, Result};

/// Agreement required between the direct residual and the POD closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-8;

/// Grid and sampling metadata of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMeta {
    pub n_x: usize,
    pub n_y: usize,
    pub n_components: usize,
    /// Grid spacing.
    pub dx: f64,
    /// Sampling interval in seconds.
    pub dt: f64,
    /// Sampling frequency in Hz.
    pub f_s: f64,
}

impl GridMeta {
    pub fn new(n_x: usize, n_y: usize, n_components: usize, dx: f64, f_s: f64) -> Result<Self> {
        let meta = GridMeta {
            n_x,
            n_y,
            n_components,
            dx,
            dt: 1.0 / f_s,
            f_s,
        };
        meta.validate()?;
        Ok(meta)
    }

    /// Metadata for data without a 2D grid: `n_s` points, one component.
    pub fn points(n_s: usize, f_s: f64) -> Result<Self> {
        Self::new(n_s, 1, 1, 1.0, f_s)
    }

    pub fn n_s(&self) -> usize {
        self.n_components * self.n_x * self.n_y
    }

    fn validate(&self) -> Result<()> {
        if self.n_s() == 0 {
            return Err(Error::Domain("grid must have n_s = n_C·n_x·n_y > 0".into()));
        }
        if !(self.f_s > 0.0 && self.f_s.is_finite()) {
            return Err(Error::Domain(format!("sampling frequency {} must be > 0", self.f_s)));
        }
        Ok(())
    }
}

/// Snapshot matrix `D ∈ ℝ^{n_s×n_t}` with metadata. Immutable once built.
#[derive(Clone, Debug)]
pub struct DataMatrix {
    values: RMatrix,
    meta: GridMeta,
    mean_removed: bool,
}

impl DataMatrix {
    pub fn new(values: RMatrix, meta: GridMeta) -> Result<Self> {
        meta.validate()?;
        if values.nrows() != meta.n_s() {
            return Err(Error::Shape(format!(
                "matrix has {} rows but grid has n_s = {}",
                values.nrows(),
                meta.n_s()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::Domain("n_t must be > 0".into()));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            let (i, k) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::NonFinite(format!("data matrix entry ({i}, {k})")));
        }
        Ok(DataMatrix {
            values,
            meta,
            mean_removed: false,
        })
    }

    /// Wrap a matrix of ungridded points sampled at `f_s`.
    pub fn from_matrix(values: RMatrix, f_s: f64) -> Result<Self> {
        let meta = GridMeta::points(values.nrows(), f_s)?;
        Self::new(values, meta)
    }

    pub fn values(&self) -> &RMatrix {
        &self.values
    }

    pub fn into_values(self) -> RMatrix {
        self.values
    }

    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }

    pub fn mean_removed(&self) -> bool {
        self.mean_removed
    }

    pub fn n_s(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.values.ncols()
    }

    pub(crate) fn set_mean_removed(&mut self, flag: bool) {
        self.mean_removed = flag;
    }

    /// Copy of the data with different values but the same metadata.
    pub fn with_values(&self, values: RMatrix) -> Result<Self> {
        let mut out = Self::new(values, self.meta.clone())?;
        out.mean_removed = self.mean_removed;
        Ok(out)
    }
}

/// Column-major flattening of a field of shape `(n_x, n_y, n_C)`.
pub fn flatten(field: &Array3<f64>, meta: &GridMeta) -> Result<Vec<f64>> {
    let shape = field.shape();
    if shape != [meta.n_x, meta.n_y, meta.n_components] {
        return Err(Error::Shape(format!(
            "field shape {:?} does not match grid ({}, {}, {})",
            shape, meta.n_x, meta.n_y, meta.n_components
        )));
    }
    let mut out = Vec::with_capacity(meta.n_s());
    for c in 0..meta.n_components {
        for iy in 0..meta.n_y {
            for ix in 0..meta.n_x {
                out.push(field[[ix, iy, c]]);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`flatten`].
pub fn unflatten(v: &[f64], meta: &GridMeta) -> Result<Array3<f64>> {
    if v.len() != meta.n_s() {
        return Err(Error::Shape(format!(
            "vector of length {} cannot fill a grid with n_s = {}",
            v.len(),
            meta.n_s()
        )));
    }
    let (nx, ny) = (meta.n_x, meta.n_y);
    Ok(Array3::from_shape_fn(
        (nx, ny, meta.n_components),
        |(ix, iy, c)| v[c * nx * ny + iy * nx + ix],
    ))
}

/// Subtract the temporal mean of every row. Returns the centred data and
/// the mean snapshot.
pub fn remove_mean(d: &DataMatrix) -> (DataMatrix, Vec<f64>) {
    let n_t = d.n_t() as f64;
    let mean: Vec<f64> = d.values.row_iter().map(|r| r.sum() / n_t).collect();
    let mut values = d.values.clone();
    for (i, m) in mean.iter().enumerate() {
        values.row_mut(i).add_scalar_mut(-m);
    }
    let out = DataMatrix {
        values,
        meta: d.meta.clone(),
        mean_removed: true,
    };
    (out, mean)
}

/// Mesh-independent energy `‖D‖_F² / (n_s·n_t)`.
pub fn total_energy(d: &DataMatrix) -> f64 {
    d.values.norm_squared() / (d.n_s() * d.n_t()) as f64
}

/// Matrix norm used to measure convergence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormKind {
    /// Largest singular value.
    #[default]
    Spectral,
    Frobenius,
}

/// Relative approximation error `E(r̃)` for `r̃ = 0..=R`.
#[derive(Clone, Debug)]
pub struct ConvergenceCurve {
    pub norm: NormKind,
    /// `‖D − D̃(r̃)‖ / ‖D‖` computed from the residual.
    pub direct: Vec<f64>,
    /// Closed form from the POD amplitudes, when the input is a POD.
    pub closed_form: Option<Vec<f64>>,
}

/// Convergence of a decomposition towards the data.
///
/// Partial sums are accumulated in complex arithmetic so that truncations
/// splitting a conjugate pair are still measured. For a POD the closed
/// form from the amplitudes is also returned and must agree with the direct
/// residual to [`CLOSED_FORM_TOL`].
pub fn convergence_curve(
    d: &DataMatrix,
    dec: &Decomposition,
    norm: NormKind,
) -> Result<ConvergenceCurve> {
    convergence_curve_upto(d, dec, norm, dec.rank())
}

/// [`convergence_curve`] restricted to `r̃ = 0..=min(r_max, R)`.
pub fn convergence_curve_upto(
    d: &DataMatrix,
    dec: &Decomposition,
    norm: NormKind,
    r_max: usize,
) -> Result<ConvergenceCurve> {
    let r_max = r_max.min(dec.rank());
    if dec.n_s() != d.n_s() || dec.n_t() != d.n_t() {
        return Err(Error::Shape(format!(
            "decomposition is {}×{}, data is {}×{}",
            dec.n_s(),
            dec.n_t(),
            d.n_s(),
            d.n_t()
        )));
    }
    let measure = |m: &CMatrix| match norm {
        NormKind::Spectral => spectral_norm_complex(m),
        NormKind::Frobenius => m.norm(),
    };
    let d_norm = match norm {
        NormKind::Spectral => spectral_norm(d.values()),
        NormKind::Frobenius => d.values().norm(),
    };
    if d_norm == 0.0 {
        return Err(Error::Degenerate("data matrix has zero norm".into()));
    }
    let mut residual = to_complex(d.values());
    let mut direct = Vec::with_capacity(r_max + 1);
    direct.push(measure(&residual) / d_norm);
    for r in 0..r_max {
        let phi = dec.phi.column(r);
        let psi = dec.psi.column(r);
        residual -= (phi * psi.transpose()) * crate::C64::new(dec.sigma[r], 0.0);
        direct.push(measure(&residual) / d_norm);
    }

    let closed_form = if dec.kind == DecompositionKind::Pod {
        let mut closed = pod_closed_form(&dec.sigma, norm);
        closed.truncate(r_max + 1);
        let worst = closed
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if worst > CLOSED_FORM_TOL {
            return Err(Error::NumericalConsistency(format!(
                "POD closed-form convergence differs from the residual by {worst:.3e}"
            )));
        }
        Some(closed)
    } else {
        None
    };
    Ok(ConvergenceCurve {
        norm,
        direct,
        closed_form,
    })
}

/// Convergence of a POD from its amplitudes alone.
///
/// With the Frobenius norm this is `sqrt(Σ_{r≥r̃} σ_r² / Σ_r σ_r²)`; with
/// the spectral norm the residual's largest singular value is `σ_r̃`.
pub fn pod_closed_form(sigma: &[f64], norm: NormKind) -> Vec<f64> {
    let r_max = sigma.len();
    match norm {
        NormKind::Frobenius => {
            let total: f64 = sigma.iter().map(|s| s * s).sum();
            (0..=r_max)
                .map(|rt| {
                    let tail: f64 = sigma[rt..].iter().map(|s| s * s).sum();
                    if total > 0.0 {
                        (tail / total).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        NormKind::Spectral => {
            let top = sigma.first().copied().unwrap_or(0.0);
            (0..=r_max)
                .map(|rt| {
                    if top > 0.0 {
                        sigma.get(rt).copied().unwrap_or(0.0) / top
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    }
}

/// Energy bookkeeping of a decomposition.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    /// `‖D‖_F² / (n_s·n_t)`.
    pub total_energy: f64,
    /// `σ̂_r² = σ_r² / (n_s·n_t)` per mode.
    pub per_mode: Vec<f64>,
    /// `E(r̃)` for `r̃ = 0..=R`.
    pub convergence: Vec<f64>,
}

pub fn energy_report(d: &DataMatrix, dec: &Decomposition, norm: NormKind) -> Result<EnergyReport> {
    let curve = convergence_curve(d, dec, norm)?;
    Ok(EnergyReport {
        total_energy: total_energy(d),
        per_mode: dec.sigma.iter().map(|s| s * s / (d.n_s() * d.n_t()) as f64).collect(),
        convergence: curve.direct,
    })
}
