//! Basis matrices and projections onto them.
//!
//! A basis is stored as a complex matrix whose columns are the basis
//! vectors. Projection onto the column space uses the pseudo-inverse, which
//! equals `(BᴴB)⁻¹Bᴴ` for a tall full-rank basis and `Bᴴ(BBᴴ)⁻¹` for a
//! wide one, and degrades to a truncated pseudo-inverse when the Gram matrix
//! is singular.

use std::f64::consts::PI;

use crate::linalg::{max_abs, pinv, to_complex};
use crate::{CMatrix, Error, RMatrix, Result, C64};

pub const UNIT_NORM_TOL: f64 = 1e-10;
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Fourier,
    Delta,
    Vandermonde,
    Eigenfunction,
    Custom,
}

#[derive(Clone, Debug)]
pub struct BasisMatrix {
    columns: CMatrix,
    kind: BasisKind,
    /// Columns are mutually orthogonal (and unit norm, except for the
    /// impulse basis which keeps its `1/√n` scaling).
    orthonormal: bool,
}

impl BasisMatrix {
    /// Build a basis from arbitrary columns. Columns are rescaled to unit
    /// norm; zero columns are rejected. Fourier, impulse and Vandermonde
    /// bases come from their dedicated constructors only, since their kind
    /// selects fast paths.
    pub fn new(mut columns: CMatrix, kind: BasisKind) -> Result<Self> {
        if !matches!(kind, BasisKind::Eigenfunction | BasisKind::Custom) {
            return Err(Error::Domain(format!(
                "{kind:?} bases must be built with their own constructor"
            )));
        }
        if columns.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("basis matrix".into()));
        }
        for mut col in columns.column_iter_mut() {
            let n = col.norm();
            if n == 0.0 {
                return Err(Error::Degenerate("basis has a zero column".into()));
            }
            col /= C64::new(n, 0.0);
        }
        let orthonormal = gram_deviation(&columns) < ORTHONORMAL_TOL;
        Ok(BasisMatrix {
            columns,
            kind,
            orthonormal,
        })
    }

    pub fn from_real(columns: &RMatrix, kind: BasisKind) -> Result<Self> {
        Self::new(to_complex(columns), kind)
    }

    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Orthonormal with unit-norm columns, so that `Bᴴ` is the inverse on
    /// the column space.
    pub fn admits_shortcut(&self) -> bool {
        self.orthonormal && self.kind != BasisKind::Delta
    }

    /// Vector length `n`.
    pub fn len(&self) -> usize {
        self.columns.nrows()
    }

    /// Number of basis vectors.
    pub fn n_basis(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }
}

/// `‖BᴴB − I‖_max`.
pub fn gram_deviation(b: &CMatrix) -> f64 {
    let g = b.adjoint() * b;
    max_abs(&(g - CMatrix::identity(b.ncols(), b.ncols())))
}

/// Unitary Fourier matrix `exp(2πj·m·k/n)/√n`.
pub fn fourier_basis(n: usize) -> Result<BasisMatrix> {
    if n == 0 {
        return Err(Error::Domain("Fourier basis needs n ≥ 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let columns = CMatrix::from_fn(n, n, |m, k| {
        // reduce the exponent mod n to keep the phase accurate for large n
        let e = ((m * k) % n) as f64;
        C64::from_polar(scale, 2.0 * PI * e / n as f64)
    });
    Ok(BasisMatrix {
        columns,
        kind: BasisKind::Fourier,
        orthonormal: true,
    })
}

/// Impulse basis `I/√n`.
pub fn delta_basis(n: usize) -> Result<BasisMatrix> {
    if n == 0 {
        return Err(Error::Domain("impulse basis needs n ≥ 1".into()));
    }
    let s = 1.0 / (n as f64).sqrt();
    Ok(BasisMatrix {
        columns: CMatrix::from_diagonal_element(n, n, C64::new(s, 0.0)),
        kind: BasisKind::Delta,
        orthonormal: true,
    })
}

/// Columns `[1, λ, λ², …, λ^{n_t−1}]ᵀ` normalized to unit length.
///
/// Growing columns (`|λ| > 1`) are evaluated as powers of `1/λ` counted from
/// the last sample, which avoids overflow for long records.
pub fn vandermonde_basis(lambdas: &[C64], n_t: usize) -> Result<BasisMatrix> {
    if n_t == 0 {
        return Err(Error::Domain("Vandermonde basis needs n_t ≥ 1".into()));
    }
    if lambdas.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::NonFinite("eigenvalue list".into()));
    }
    let mut columns = CMatrix::zeros(n_t, lambdas.len());
    for (r, &lam) in lambdas.iter().enumerate() {
        let mut col: Vec<C64> = vec![C64::new(0.0, 0.0); n_t];
        if lam.norm() > 1.0 {
            let inv = lam.inv();
            let mut p = C64::new(1.0, 0.0);
            for k in (0..n_t).rev() {
                col[k] = p;
                p *= inv;
            }
        } else {
            let mut p = C64::new(1.0, 0.0);
            for c in col.iter_mut() {
                *c = p;
                p *= lam;
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (k, z) in col.into_iter().enumerate() {
            columns[(k, r)] = z / norm;
        }
    }
    let orthonormal = gram_deviation(&columns) < ORTHONORMAL_TOL;
    Ok(BasisMatrix {
        columns,
        kind: BasisKind::Vandermonde,
        orthonormal,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMode {
    /// `(BᴴB)⁻¹Bᴴ`: best approximation for tall bases.
    LeastSquares,
    /// `Bᴴ(BBᴴ)⁻¹`: minimum-norm coefficients for wide bases.
    LeastNorm,
    /// `Bᴴ`: valid for orthonormal bases only.
    OrthonormalShortcut,
}

#[derive(Clone, Debug)]
pub struct Projector {
    basis: BasisMatrix,
    mode: ProjectionMode,
}

/// Coefficients of a projection and the rank actually used.
#[derive(Clone, Debug)]
pub struct Projection {
    pub coefficients: CMatrix,
    pub effective_rank: usize,
    /// True when the Gram matrix was singular and the pseudo-inverse was
    /// truncated.
    pub rank_deficient: bool,
}

impl Projector {
    pub fn new(basis: BasisMatrix, mode: ProjectionMode) -> Result<Self> {
        if mode == ProjectionMode::OrthonormalShortcut && !basis.admits_shortcut() {
            return Err(Error::Domain(
                "orthonormal shortcut requires an orthonormal unit-norm basis".into(),
            ));
        }
        Ok(Projector { basis, mode })
    }

    /// Least squares, or the shortcut when the basis allows it.
    pub fn auto(basis: BasisMatrix) -> Self {
        let mode = if basis.admits_shortcut() {
            ProjectionMode::OrthonormalShortcut
        } else {
            ProjectionMode::LeastSquares
        };
        Projector { basis, mode }
    }

    pub fn basis(&self) -> &BasisMatrix {
        &self.basis
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    /// Coefficients of the columns of `m` in the basis (space view).
    pub fn project(&self, m: &CMatrix) -> Result<Projection> {
        let b = &self.basis.columns;
        if m.nrows() != b.nrows() {
            return Err(Error::Shape(format!(
                "basis vectors have length {}, projected matrix has {} rows",
                b.nrows(),
                m.nrows()
            )));
        }
        match self.mode {
            ProjectionMode::OrthonormalShortcut => Ok(Projection {
                coefficients: b.adjoint() * m,
                effective_rank: b.ncols(),
                rank_deficient: false,
            }),
            ProjectionMode::LeastSquares | ProjectionMode::LeastNorm => {
                let p = pinv(b);
                let full = b.nrows().min(b.ncols());
                Ok(Projection {
                    coefficients: &p.matrix * m,
                    effective_rank: p.effective_rank,
                    rank_deficient: p.effective_rank < full,
                })
            }
        }
    }

    /// Coefficients of the rows of `m` (time view): solves `M ≈ X Bᵀ`,
    /// i.e. `X = M B̄ (BᵀB̄)⁻¹`.
    pub fn project_rows(&self, m: &CMatrix) -> Result<Projection> {
        let mut p = self.project(&m.transpose())?;
        p.coefficients = p.coefficients.transpose();
        Ok(p)
    }
}

/// Orthogonal projector `B(BᴴB)⁻¹Bᴴ` onto the column space of `B`.
pub fn autoencoder(b: &BasisMatrix) -> CMatrix {
    let p = pinv(&b.columns);
    &b.columns * p.matrix
}

/// General 2D transform `(ΦᴴΦ)⁻¹Φᴴ D Ψ̄(ΨᵀΨ̄)⁻¹`.
pub fn transform_2d(d: &CMatrix, phi: &BasisMatrix, psi: &BasisMatrix) -> Result<CMatrix> {
    if phi.len() != d.nrows() || psi.len() != d.ncols() {
        return Err(Error::Shape(format!(
            "2D transform of a {}×{} matrix with bases of length {} and {}",
            d.nrows(),
            d.ncols(),
            phi.len(),
            psi.len()
        )));
    }
    let space = Projector::auto(phi.clone()).project(d)?.coefficients;
    Ok(Projector::auto(psi.clone())
        .project_rows(&space)?
        .coefficients)
}

/// Synthesis `Φ X Ψᵀ` inverting [`transform_2d`] for complete bases.
pub fn inverse_transform_2d(x: &CMatrix, phi: &BasisMatrix, psi: &BasisMatrix) -> Result<CMatrix> {
    if x.nrows() != phi.n_basis() || x.ncols() != psi.n_basis() {
        return Err(Error::Shape("coefficient matrix does not match bases".into()));
    }
    Ok(phi.columns() * x * psi.columns().transpose())
}
