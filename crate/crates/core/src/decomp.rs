//! The canonical decompositions: impulse, Fourier, POD and DMD.

use std::f64::consts::PI;

use crate::basis::{delta_basis, fourier_basis, vandermonde_basis, BasisKind, BasisMatrix};
use crate::datamatrix::DataMatrix;
use crate::factorize::{complete_from_psi, complete_from_psi_as, Decomposition, DecompositionKind};
use crate::linalg::{svd_thin, sym_eig_desc};
use crate::{spectral, CMatrix, Error, RMatrix, Result, C64};

/// POD eigenvalues below this fraction of the largest carry no rank.
pub const POD_RANK_TOL: f64 = 1e-12;
/// Eigenvalues closer than this (relative to the largest) count as repeated.
pub const POD_TIE_TOL: f64 = 1e-10;
/// DMD drops singular values of the shifted snapshots below this fraction.
pub const DMD_RANK_TOL: f64 = 1e-10;
/// `|λ|` within this distance of 1 has an infinite e-folding time.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// Impulse decomposition: normalized snapshots with `σ_k = ‖d_k‖√n_t`.
pub fn delta_decomposition(d: &DataMatrix) -> Result<Decomposition> {
    complete_from_psi(d, &delta_basis(d.n_t())?)
}

/// Row-wise DFT of `D`, modes in FFT bin order with frequencies attached.
pub fn dft_decomposition(d: &DataMatrix) -> Result<Decomposition> {
    let mut dec = complete_from_psi(d, &fourier_basis(d.n_t())?)?;
    dec.frequencies = Some(spectral::bin_frequencies(d.n_t(), d.meta().f_s));
    Ok(dec)
}

/// Temporal correlation matrix and its eigendecomposition.
#[derive(Clone, Debug)]
pub struct PodEigenSystem {
    /// `K = DᵀD`.
    pub k: RMatrix,
    /// Descending, clipped at zero.
    pub lambdas: Vec<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub psis: RMatrix,
    /// Number of eigenvalues above [`POD_RANK_TOL`]`·λ_max`.
    pub rank: usize,
    /// Groups of indices sharing one eigenvalue.
    pub repeated: Vec<Vec<usize>>,
}

pub fn pod_eigensystem(d: &DataMatrix) -> PodEigenSystem {
    let k = crate::linalg::matmul(&d.values().transpose(), d.values());
    let (mut lambdas, psis) = sym_eig_desc(&k);
    let lmax = lambdas.first().cloned().unwrap_or(0.0).max(0.0);
    for l in lambdas.iter_mut() {
        *l = l.max(0.0);
    }
    let rank = if lmax == 0.0 {
        0
    } else {
        lambdas.iter().take_while(|&&l| l > POD_RANK_TOL * lmax).count()
    };
    let mut repeated: Vec<Vec<usize>> = Vec::new();
    for r in 1..rank {
        if lambdas[r - 1] - lambdas[r] < POD_TIE_TOL * lmax {
            match repeated.last_mut() {
                Some(g) if *g.last().unwrap() == r - 1 => g.push(r),
                _ => repeated.push(vec![r - 1, r]),
            }
        }
    }
    PodEigenSystem {
        k,
        lambdas,
        psis,
        rank,
        repeated,
    }
}

/// Proper orthogonal decomposition through the temporal correlation matrix.
pub fn pod(d: &DataMatrix) -> Result<Decomposition> {
    pod_from_eigensystem(d, &pod_eigensystem(d))
}

pub fn pod_from_eigensystem(d: &DataMatrix, eig: &PodEigenSystem) -> Result<Decomposition> {
    if eig.rank == 0 {
        let mut dec = Decomposition::new(
            CMatrix::zeros(d.n_s(), 0),
            Vec::new(),
            CMatrix::zeros(d.n_t(), 0),
            DecompositionKind::Pod,
        )?;
        dec.notes.push("data matrix is zero; POD is empty".into());
        return Ok(dec);
    }
    let psi = eig.psis.columns(0, eig.rank).into_owned();
    let basis = BasisMatrix::from_real(&psi, BasisKind::Eigenfunction)?;
    let mut dec = complete_from_psi_as(d, &basis, DecompositionKind::Pod)?;
    for g in &eig.repeated {
        let msg = format!("repeated eigenvalues at modes {g:?}; the POD is not unique there");
        log::warn!("{msg}");
        dec.notes.push(msg);
    }
    Ok(dec)
}

/// Discrete-time eigenvalues of the linear propagator fitted to the data.
#[derive(Clone, Debug)]
pub struct DmdEigenSystem {
    /// Ordered by angle in `[0, 2π)`, then by modulus descending.
    pub lambdas: Vec<C64>,
    pub moduli: Vec<f64>,
    /// `−1/ln|λ|` in samples; infinite on the unit circle, negative for
    /// growing modes.
    pub e_folding: Vec<f64>,
    /// Rank of the reduced propagator.
    pub rank: usize,
}

impl DmdEigenSystem {
    /// Frequencies `arg(λ)·f_s/2π` in `(−f_s/2, f_s/2]`.
    pub fn frequencies(&self, f_s: f64) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.arg() * f_s / (2.0 * PI)).collect()
    }
}

pub fn e_folding_time(lambda: C64) -> f64 {
    let m = lambda.norm();
    if (m - 1.0).abs() < UNIT_CIRCLE_TOL {
        f64::INFINITY
    } else {
        -1.0 / m.ln()
    }
}

fn angle_key(l: &C64) -> f64 {
    let a = l.arg();
    let a = if a < 0.0 { a + 2.0 * PI } else { a };
    // fold angles within rounding of 2π back onto 0
    if 2.0 * PI - a < 1e-12 {
        0.0
    } else {
        a
    }
}

/// Exact DMD eigenvalues of the shifted snapshot pair.
pub fn dmd_eigenvalues(d: &DataMatrix, rank: Option<usize>) -> Result<DmdEigenSystem> {
    let n_t = d.n_t();
    if n_t < 2 {
        return Err(Error::Domain("DMD needs at least two snapshots".into()));
    }
    let x = d.values().columns(0, n_t - 1).into_owned();
    let xp = d.values().columns(1, n_t - 1).into_owned();
    let (u, s, v) = svd_thin(&x);
    let order = crate::factorize::descending_order(&s);
    let smax = order.first().map(|&i| s[i]).unwrap_or(0.0);
    let mut r = order
        .iter()
        .take_while(|&&i| smax > 0.0 && s[i] > DMD_RANK_TOL * smax)
        .count();
    if let Some(cap) = rank {
        r = r.min(cap);
    }
    let ur = RMatrix::from_fn(u.nrows(), r, |i, j| u[(i, order[j])]);
    let vr = RMatrix::from_fn(v.nrows(), r, |i, j| v[(i, order[j])]);
    let sinv = RMatrix::from_diagonal(&nalgebra::DVector::from_fn(r, |j, _| 1.0 / s[order[j]]));
    let a_tilde = ur.transpose() * xp * vr * sinv;
    let mut lambdas: Vec<C64> = if r == 0 {
        Vec::new()
    } else {
        a_tilde.complex_eigenvalues().iter().cloned().collect()
    };
    lambdas.sort_by(|a, b| {
        angle_key(a)
            .total_cmp(&angle_key(b))
            .then(b.norm().total_cmp(&a.norm()))
    });
    Ok(DmdEigenSystem {
        moduli: lambdas.iter().map(|l| l.norm()).collect(),
        e_folding: lambdas.iter().map(|&l| e_folding_time(l)).collect(),
        lambdas,
        rank: r,
    })
}

/// DMD completed from its Vandermonde temporal basis.
pub fn dmd(d: &DataMatrix, rank: Option<usize>) -> Result<Decomposition> {
    Ok(dmd_with_eigensystem(d, rank)?.0)
}

pub fn dmd_with_eigensystem(d: &DataMatrix, rank: Option<usize>) -> Result<(Decomposition, DmdEigenSystem)> {
    let eig = dmd_eigenvalues(d, rank)?;
    if eig.rank == 0 {
        let mut dec = Decomposition::new(
            CMatrix::zeros(d.n_s(), 0),
            Vec::new(),
            CMatrix::zeros(d.n_t(), 0),
            DecompositionKind::Dmd,
        )?;
        dec.notes.push("data matrix is zero; DMD is empty".into());
        return Ok((dec, eig));
    }
    let basis = vandermonde_basis(&eig.lambdas, d.n_t())?;
    let mut dec = complete_from_psi(d, &basis)?;
    dec.frequencies = Some(eig.frequencies(d.meta().f_s));
    Ok((dec, eig))
}
