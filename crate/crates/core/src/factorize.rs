//! Completion of the factorization `D = Φ Σ Ψᵀ` from one given basis.
//!
//! Given the spatial basis, the temporal structures and amplitudes follow by
//! projection of `D` onto it; given the temporal basis, the spatial
//! structures follow symmetrically. Every decomposition in the crate is built
//! through one of these two routes.

use crate::basis::{BasisKind, BasisMatrix};
use crate::datamatrix::DataMatrix;
use crate::linalg::{complex_times_real, pinv, real_times_complex, to_complex};
use crate::{spectral, CMatrix, Error, RMatrix, Result, C64};

/// Amplitudes below this fraction of the largest are degenerate.
pub const DEGENERATE_TOL: f64 = 1e-14;
/// Imaginary residue tolerance of a reconstruction, relative to its norm.
pub const REALNESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionKind {
    Delta,
    Dft,
    Pod,
    Dmd,
    Eigenfunction,
    Mpod,
    Custom,
}

impl DecompositionKind {
    /// Kinds whose natural mode order carries meaning and is kept.
    pub fn keeps_natural_order(self) -> bool {
        matches!(self, DecompositionKind::Dft | DecompositionKind::Dmd)
    }

    pub fn name(self) -> &'static str {
        match self {
            DecompositionKind::Delta => "delta",
            DecompositionKind::Dft => "dft",
            DecompositionKind::Pod => "pod",
            DecompositionKind::Dmd => "dmd",
            DecompositionKind::Eigenfunction => "eigenfunction",
            DecompositionKind::Mpod => "mpod",
            DecompositionKind::Custom => "custom",
        }
    }

    fn from_basis(kind: BasisKind) -> Self {
        match kind {
            BasisKind::Fourier => DecompositionKind::Dft,
            BasisKind::Delta => DecompositionKind::Delta,
            BasisKind::Vandermonde => DecompositionKind::Dmd,
            BasisKind::Eigenfunction => DecompositionKind::Eigenfunction,
            BasisKind::Custom => DecompositionKind::Custom,
        }
    }
}

/// `D = Σ_r σ_r φ_r ψ_rᵀ`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Spatial structures, `n_s × R`.
    pub phi: CMatrix,
    /// Amplitudes, `R`.
    pub sigma: Vec<f64>,
    /// Temporal structures, `n_t × R`.
    pub psi: CMatrix,
    pub kind: DecompositionKind,
    /// Modes whose amplitude vanished; their computed factor is zero.
    pub degenerate: Vec<bool>,
    /// Index of each mode's column in the given basis.
    pub order: Vec<usize>,
    /// Frequency of each mode, when the kind has one.
    pub frequencies: Option<Vec<f64>>,
    /// Rank used by a truncated pseudo-inverse, when one was needed.
    pub effective_rank: Option<usize>,
    pub notes: Vec<String>,
}

impl Decomposition {
    /// Assemble a decomposition from explicit factors.
    pub fn new(phi: CMatrix, sigma: Vec<f64>, psi: CMatrix, kind: DecompositionKind) -> Result<Self> {
        let r = sigma.len();
        if phi.ncols() != r || psi.ncols() != r {
            return Err(Error::Shape(format!(
                "factors have {} and {} columns for {} amplitudes",
                phi.ncols(),
                psi.ncols(),
                r
            )));
        }
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Domain("amplitudes must be finite and non-negative".into()));
        }
        let max = sigma.iter().cloned().fold(0.0, f64::max);
        let degenerate = sigma.iter().map(|&s| is_degenerate(s, max)).collect();
        Ok(Decomposition {
            phi,
            sigma,
            psi,
            kind,
            degenerate,
            order: (0..r).collect(),
            frequencies: None,
            effective_rank: None,
            notes: Vec::new(),
        })
    }

    pub fn n_s(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.psi.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `σ_r² / Σ σ²`; zeros for an all-zero decomposition.
    pub fn normalized_energies(&self) -> Vec<f64> {
        let total: f64 = self.sigma.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return vec![0.0; self.rank()];
        }
        self.sigma.iter().map(|s| s * s / total).collect()
    }

    /// Reorder modes by the permutation `perm` (new position ← old index).
    pub fn permuted(&self, perm: &[usize]) -> Decomposition {
        let pick_cols = |m: &CMatrix| CMatrix::from_fn(m.nrows(), perm.len(), |i, j| m[(i, perm[j])]);
        Decomposition {
            phi: pick_cols(&self.phi),
            sigma: perm.iter().map(|&p| self.sigma[p]).collect(),
            psi: pick_cols(&self.psi),
            kind: self.kind,
            degenerate: perm.iter().map(|&p| self.degenerate[p]).collect(),
            order: perm.iter().map(|&p| self.order[p]).collect(),
            frequencies: self
                .frequencies
                .as_ref()
                .map(|f| perm.iter().map(|&p| f[p]).collect()),
            effective_rank: self.effective_rank,
            notes: self.notes.clone(),
        }
    }

    /// Modes by descending amplitude, ties in ascending index.
    pub fn sorted_view(&self) -> Decomposition {
        self.permuted(&descending_order(&self.sigma))
    }

    /// First `r` modes.
    pub fn truncated(&self, r: usize) -> Decomposition {
        let r = r.min(self.rank());
        self.permuted(&(0..r).collect::<Vec<_>>())
    }
}

/// Stable descending order of `values`.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

fn is_degenerate(s: f64, max: f64) -> bool {
    max == 0.0 || s < DEGENERATE_TOL * max
}

/// Normalize the columns of `raw`; returns amplitudes, unit columns and the
/// degenerate flags.
fn split_amplitudes(raw: CMatrix) -> (Vec<f64>, CMatrix, Vec<bool>) {
    let sigma: Vec<f64> = raw.column_iter().map(|c| c.norm()).collect();
    let max = sigma.iter().cloned().fold(0.0, f64::max);
    let mut unit = raw;
    let mut degenerate = Vec::with_capacity(sigma.len());
    for (r, mut col) in unit.column_iter_mut().enumerate() {
        if is_degenerate(sigma[r], max) {
            col.fill(C64::new(0.0, 0.0));
            degenerate.push(true);
        } else {
            col /= C64::new(sigma[r], 0.0);
            degenerate.push(false);
        }
    }
    let sigma = sigma
        .into_iter()
        .zip(&degenerate)
        .map(|(s, &d)| if d { 0.0 } else { s })
        .collect();
    (sigma, unit, degenerate)
}

/// Rotate each computed column so its largest-magnitude entry is real and
/// non-negative; the given column absorbs the opposite rotation.
fn apply_phase_convention(computed: &mut CMatrix, given: &mut CMatrix) {
    for r in 0..computed.ncols() {
        let col = computed.column(r);
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm();
            if m > best_mag {
                best_mag = m;
                best = i;
            }
        }
        if best_mag <= 0.0 {
            continue;
        }
        let phase = col[best] / best_mag;
        computed.column_mut(r).iter_mut().for_each(|z| *z *= phase.conj());
        given.column_mut(r).iter_mut().for_each(|z| *z *= phase);
    }
}

struct Completion {
    raw: CMatrix,
    effective_rank: Option<usize>,
}

/// `D_φ` transposed, i.e. `(Φ⁺ D)ᵀ`: one column per mode.
fn project_space(d: &DataMatrix, phi: &BasisMatrix) -> Completion {
    let n = d.n_s();
    match phi.kind() {
        BasisKind::Fourier if phi.n_basis() == n => Completion {
            raw: spectral::cols_analysis(&to_complex(d.values())).transpose(),
            effective_rank: None,
        },
        BasisKind::Delta => Completion {
            raw: to_complex(d.values()).transpose() * C64::new((n as f64).sqrt(), 0.0),
            effective_rank: None,
        },
        _ if phi.admits_shortcut() => Completion {
            raw: complex_times_real(&phi.columns().adjoint(), d.values()).transpose(),
            effective_rank: None,
        },
        _ => {
            let p = pinv(phi.columns());
            let full = phi.len().min(phi.n_basis());
            Completion {
                raw: complex_times_real(&p.matrix, d.values()).transpose(),
                effective_rank: (p.effective_rank < full).then_some(p.effective_rank),
            }
        }
    }
}

/// `D_ψ = D Ψ̄ (ΨᵀΨ̄)⁻¹`: one column per mode.
fn project_time(d: &DataMatrix, psi: &BasisMatrix) -> Completion {
    let n = d.n_t();
    match psi.kind() {
        BasisKind::Fourier if psi.n_basis() == n => Completion {
            raw: spectral::rows_analysis(d.values()),
            effective_rank: None,
        },
        BasisKind::Delta => Completion {
            raw: to_complex(d.values()) * C64::new((n as f64).sqrt(), 0.0),
            effective_rank: None,
        },
        _ if psi.admits_shortcut() => Completion {
            raw: real_times_complex(d.values(), &psi.columns().map(|z| z.conj())),
            effective_rank: None,
        },
        _ => {
            let p = pinv(psi.columns());
            let full = psi.len().min(psi.n_basis());
            Completion {
                raw: real_times_complex(d.values(), &p.matrix.transpose()),
                effective_rank: (p.effective_rank < full).then_some(p.effective_rank),
            }
        }
    }
}

fn finish(mut dec: Decomposition, effective_rank: Option<usize>) -> Decomposition {
    if let Some(r) = effective_rank {
        let msg = format!("basis Gram matrix is singular; pseudo-inverse truncated to rank {r}");
        log::warn!("{msg}");
        dec.notes.push(msg);
        dec.effective_rank = Some(r);
    }
    if dec.sigma.iter().all(|&s| s == 0.0) && dec.rank() > 0 {
        dec.notes.push("data matrix is zero; all amplitudes vanish".into());
    }
    if dec.kind.keeps_natural_order() {
        dec
    } else {
        dec.sorted_view()
    }
}

/// Complete the factorization from a spatial basis.
pub fn complete_from_phi(d: &DataMatrix, phi: &BasisMatrix) -> Result<Decomposition> {
    complete_from_phi_as(d, phi, DecompositionKind::from_basis(phi.kind()))
}

/// [`complete_from_phi`] labelling the result with `kind`.
pub fn complete_from_phi_as(
    d: &DataMatrix,
    phi: &BasisMatrix,
    kind: DecompositionKind,
) -> Result<Decomposition> {
    if phi.len() != d.n_s() {
        return Err(Error::Shape(format!(
            "spatial basis has length {}, data has {} points",
            phi.len(),
            d.n_s()
        )));
    }
    let c = project_space(d, phi);
    let (sigma, mut psi, degenerate) = split_amplitudes(c.raw);
    let mut phi_cols = phi.columns().clone();
    apply_phase_convention(&mut psi, &mut phi_cols);
    let r = sigma.len();
    let dec = Decomposition {
        phi: phi_cols,
        sigma,
        psi,
        kind,
        degenerate,
        order: (0..r).collect(),
        frequencies: None,
        effective_rank: None,
        notes: Vec::new(),
    };
    Ok(finish(dec, c.effective_rank))
}

/// Complete the factorization from a temporal basis.
pub fn complete_from_psi(d: &DataMatrix, psi: &BasisMatrix) -> Result<Decomposition> {
    complete_from_psi_as(d, psi, DecompositionKind::from_basis(psi.kind()))
}

/// [`complete_from_psi`] labelling the result with `kind`.
pub fn complete_from_psi_as(
    d: &DataMatrix,
    psi: &BasisMatrix,
    kind: DecompositionKind,
) -> Result<Decomposition> {
    if psi.len() != d.n_t() {
        return Err(Error::Shape(format!(
            "temporal basis has length {}, data has {} snapshots",
            psi.len(),
            d.n_t()
        )));
    }
    let c = project_time(d, psi);
    let (sigma, mut phi, degenerate) = split_amplitudes(c.raw);
    let mut psi_cols = psi.columns().clone();
    apply_phase_convention(&mut phi, &mut psi_cols);
    let r = sigma.len();
    let dec = Decomposition {
        phi,
        sigma,
        psi: psi_cols,
        kind,
        degenerate,
        order: (0..r).collect(),
        frequencies: None,
        effective_rank: None,
        notes: Vec::new(),
    };
    Ok(finish(dec, c.effective_rank))
}

/// `Σ_{r<r̃} σ_r φ_r ψ_rᵀ` without the realness check.
pub fn reconstruct_complex(dec: &Decomposition, r: usize) -> Result<CMatrix> {
    if r > dec.rank() {
        return Err(Error::Domain(format!(
            "requested {r} modes from a rank-{} decomposition",
            dec.rank()
        )));
    }
    let phi_s = CMatrix::from_fn(dec.n_s(), r, |i, j| dec.phi[(i, j)] * dec.sigma[j]);
    let psi_t = dec.psi.columns(0, r).transpose();
    Ok(phi_s * psi_t)
}

/// Real reconstruction from the first `r` modes. The imaginary part must
/// vanish to [`REALNESS_TOL`] relative to the reconstruction; a larger
/// residue means conjugate partners are missing or the basis is broken.
pub fn reconstruct(dec: &Decomposition, r: usize) -> Result<RMatrix> {
    let z = reconstruct_complex(dec, r)?;
    let re = z.map(|c| c.re);
    let im = z.map(|c| c.im);
    let residue = im.norm();
    let tolerance = REALNESS_TOL * re.norm().max(f64::MIN_POSITIVE);
    if residue > tolerance {
        return Err(Error::ConjugatePairing { residue, tolerance });
    }
    Ok(re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{delta_basis, fourier_basis};
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_d(seed: u64, m: usize, n: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::from_matrix(RMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)), 1.0)
            .unwrap()
    }

    fn svd_basis(d: &DataMatrix) -> (BasisMatrix, BasisMatrix, Vec<f64>) {
        let (u, s, v) = crate::linalg::svd_thin(d.values());
        (
            BasisMatrix::from_real(&u, BasisKind::Eigenfunction).unwrap(),
            BasisMatrix::from_real(&v, BasisKind::Eigenfunction).unwrap(),
            s,
        )
    }

    #[test]
    fn rank_one_from_phi() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 0.0, 4.0, 0.0];
        let d = DataMatrix::from_matrix(RMatrix::from_fn(3, 4, |i, k| u[i] * v[k]), 1.0).unwrap();
        let phi = BasisMatrix::from_real(&RMatrix::from_column_slice(3, 1, &u), BasisKind::Custom)
            .unwrap();
        let dec = complete_from_phi(&d, &phi).unwrap();
        assert_eq!(dec.rank(), 1);
        assert!((dec.sigma[0] - 15.0).abs() < 1e-12);
        for k in 0..4 {
            assert!((dec.psi[(k, 0)] - C64::new(v[k] / 5.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn pod_phi_shortcut_matches_general_path() {
        let d = random_d(1, 12, 7);
        let (u, _, s) = svd_basis(&d);
        let fast = complete_from_phi(&d, &u).unwrap();
        assert!(u.admits_shortcut());
        let slow = complete_from_phi(&d, &BasisMatrix::new(u.columns().clone(), BasisKind::Custom).unwrap())
            .unwrap();
        for r in 0..7 {
            assert!((fast.sigma[r] - s[r]).abs() < 1e-10);
            assert!((fast.sigma[r] - slow.sigma[r]).abs() < 1e-10);
        }
        assert!(max_abs(&(&fast.psi - &slow.psi)) < 1e-10);
    }

    #[test]
    fn fourier_phi_is_column_transform() {
        let d = random_d(2, 8, 5);
        let dec = complete_from_phi(&d, &fourier_basis(8).unwrap()).unwrap();
        assert_eq!(dec.kind, DecompositionKind::Dft);
        // row r of Σ Ψᵀ is the r-th Fourier coefficient of each snapshot
        let f = fourier_basis(8).unwrap();
        let coeffs = f.columns().adjoint() * to_complex(d.values());
        let phase_free = CMatrix::from_fn(8, 5, |r, k| dec.psi[(k, r)] * dec.sigma[r]);
        for r in 0..8 {
            // same row up to the unit phase absorbed by φ_r
            let ratio = dec.phi[(0, r)] / f.columns()[(0, r)];
            for k in 0..5 {
                assert!((phase_free[(r, k)] * ratio - coeffs[(r, k)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn delta_psi_amplitudes() {
        let d = random_d(3, 4, 6);
        let dec = complete_from_psi(&d, &delta_basis(6).unwrap()).unwrap();
        assert_eq!(dec.kind, DecompositionKind::Delta);
        for (pos, &k) in dec.order.iter().enumerate() {
            let col = d.values().column(k);
            assert!((dec.sigma[pos] - col.norm() * 6f64.sqrt()).abs() < 1e-12);
            for i in 0..4 {
                assert!((dec.phi[(i, pos)].re.abs() - (col[i] / col.norm()).abs()).abs() < 1e-12);
            }
        }
        let back = reconstruct(&dec, 6).unwrap();
        assert!((back - d.values()).abs().max() < 1e-12);
    }

    #[test]
    fn fourier_psi_on_cosine_rows() {
        let n_t = 32;
        let d = DataMatrix::from_matrix(
            RMatrix::from_fn(5, n_t, |i, k| (i as f64 + 1.0) * (2.0 * PI * 3.0 * k as f64 / n_t as f64).cos()),
            1.0,
        )
        .unwrap();
        let dec = complete_from_psi(&d, &fourier_basis(n_t).unwrap()).unwrap();
        let nonzero: Vec<usize> = (0..n_t).filter(|&r| dec.sigma[r] > 1e-10).collect();
        assert_eq!(nonzero, vec![3, n_t - 3]);
        let back = reconstruct(&dec, n_t).unwrap();
        assert!((back - d.values()).abs().max() < 1e-12);
    }

    #[test]
    fn pod_psi_gives_singular_values() {
        let d = random_d(4, 10, 6);
        let (_, v, s) = svd_basis(&d);
        let dec = complete_from_psi(&d, &v).unwrap();
        for r in 0..6 {
            assert!((dec.sigma[r] - s[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_between_algorithms() {
        let d = random_d(5, 16, 8);
        let a2 = complete_from_psi(&d, &fourier_basis(8).unwrap()).unwrap();
        let phi = BasisMatrix::new(a2.phi.clone(), BasisKind::Custom).unwrap();
        let a1 = complete_from_phi(&d, &phi).unwrap();
        // a1 is sorted; match columns through the stored order
        for (pos, &k) in a1.order.iter().enumerate() {
            let ip = (a1.psi.column(pos).adjoint() * a2.psi.column(k))[(0, 0)].norm();
            assert!(ip > 1.0 - 1e-8, "mode {k}: {ip}");
            assert!((a1.sigma[pos] - a2.sigma[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn phase_convention_and_unit_norm() {
        let d = random_d(6, 9, 12);
        let dec = complete_from_psi(&d, &fourier_basis(12).unwrap()).unwrap();
        for r in 0..dec.rank() {
            let col = dec.phi.column(r);
            assert!((col.norm() - 1.0).abs() < 1e-10);
            assert!((dec.psi.column(r).norm() - 1.0).abs() < 1e-10);
            let big = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            assert!(big.im.abs() < 1e-12 && big.re >= 0.0);
        }
    }

    #[test]
    fn zero_data_is_degenerate() {
        let d = DataMatrix::from_matrix(RMatrix::zeros(3, 4), 1.0).unwrap();
        let dec = complete_from_psi(&d, &fourier_basis(4).unwrap()).unwrap();
        assert!(dec.sigma.iter().all(|&s| s == 0.0));
        assert!(dec.degenerate.iter().all(|&f| f));
        assert!(dec.phi.iter().all(|z| z.norm() == 0.0));
        assert_eq!(reconstruct(&dec, 4).unwrap(), RMatrix::zeros(3, 4));
    }

    #[test]
    fn reconstruction_limits() {
        let d = random_d(7, 6, 5);
        let (_, v, s) = svd_basis(&d);
        let dec = complete_from_psi(&d, &v).unwrap();
        assert_eq!(reconstruct(&dec, 0).unwrap(), RMatrix::zeros(6, 5));
        let err = d.values() - reconstruct(&dec, 1).unwrap();
        assert!((crate::linalg::spectral_norm(&err) - s[1]).abs() < 1e-10);
        assert!(reconstruct(&dec, 6).is_err());
    }

    #[test]
    fn split_conjugate_pair_is_reported() {
        let n_t = 16;
        let d = DataMatrix::from_matrix(
            RMatrix::from_fn(3, n_t, |_, k| (2.0 * PI * 2.0 * k as f64 / n_t as f64).sin()),
            1.0,
        )
        .unwrap();
        let dec = complete_from_psi(&d, &fourier_basis(n_t).unwrap()).unwrap();
        let view = dec.permuted(&[2]);
        assert!(matches!(reconstruct(&view, 1), Err(Error::ConjugatePairing { .. })));
    }

    #[test]
    fn amplitudes_invariant_under_basis_phase() {
        let d = random_d(8, 7, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let b = CMatrix::from_fn(5, 5, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let rotated = CMatrix::from_fn(5, 5, |i, j| b[(i, j)] * C64::from_polar(1.0, 0.7 * j as f64 + 0.1));
        let a = complete_from_psi(&d, &BasisMatrix::new(b, BasisKind::Custom).unwrap()).unwrap();
        let c = complete_from_psi(&d, &BasisMatrix::new(rotated, BasisKind::Custom).unwrap()).unwrap();
        for r in 0..5 {
            assert!((a.sigma[r] - c.sigma[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_mismatch() {
        let d = random_d(9, 4, 5);
        assert!(matches!(complete_from_psi(&d, &fourier_basis(4).unwrap()), Err(Error::Shape(_))));
        assert!(matches!(complete_from_phi(&d, &fourier_basis(5).unwrap()), Err(Error::Shape(_))));
    }
}
