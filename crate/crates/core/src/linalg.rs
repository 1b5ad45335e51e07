//! Dense linear-algebra helpers shared by the decompositions.

use nalgebra::{ComplexField, DMatrix};


use crate::{CMatrix, RMatrix, C64};

/// Largest dimension for which the spectral norm is taken from an exact
/// singular value decomposition; above it power iteration is used.
const EXACT_NORM_MAX_DIM: usize = 1024;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 500;

/// Moore-Penrose pseudo-inverse with its rank diagnostics.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub matrix: CMatrix,
    /// Number of singular values kept.
    pub effective_rank: usize,
    /// Columns of the input (or rows, for wide inputs) that were dropped.
    pub truncated: bool,
    /// Ratio of the smallest kept to the largest singular value.
    pub inverse_condition: f64,
}

/// Scalars accepted by [`svd_thin`].
pub trait SvdScalar: nalgebra::Scalar + Copy + faer::traits::ComplexField<Real = f64> {
    fn real_part(&self) -> f64;
}

impl SvdScalar for f64 {
    fn real_part(&self) -> f64 {
        *self
    }
}

impl SvdScalar for C64 {
    fn real_part(&self) -> f64 {
        self.re
    }
}

/// Thin SVD `A = U diag(s) Vᴴ` returning `(U, s, V)`, singular values
/// descending.
pub fn svd_thin<T: SvdScalar>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return (DMatrix::from_vec(m, 0, Vec::new()), Vec::new(), DMatrix::from_vec(n, 0, Vec::new()));
    }
    let fa = faer::Mat::<T>::from_fn(m, n, |i, j| a[(i, j)]);
    let svd = fa.as_ref().thin_svd().expect("SVD did not converge");
    let s = svd.S().column_vector();
    let (u, v) = (svd.U(), svd.V());
    (
        DMatrix::from_fn(m, k, |i, j| u[(i, j)]),
        (0..k).map(|i| s[i].real_part()).collect(),
        DMatrix::from_fn(n, k, |i, j| v[(i, j)]),
    )
}

/// `A·B` through faer's blocked kernels, which nalgebra lacks for
/// complex entries.
pub fn matmul<T: SvdScalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let fa = faer::MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols());
    let fb = faer::MatRef::from_column_major_slice(b.as_slice(), b.nrows(), b.ncols());
    let c = fa * fb;
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| c[(i, j)])
}

fn split(b: &CMatrix) -> (RMatrix, Option<RMatrix>) {
    let re = b.map(|z| z.re);
    let im = b.iter().any(|z| z.im != 0.0).then(|| b.map(|z| z.im));
    (re, im)
}

fn join(re: RMatrix, im: Option<RMatrix>) -> CMatrix {
    match im {
        Some(im) => CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)])),
        None => to_complex(&re),
    }
}

/// `A·B` for real `A` as two real products (one when `B` is real).
pub fn real_times_complex(a: &RMatrix, b: &CMatrix) -> CMatrix {
    let (re, im) = split(b);
    join(matmul(a, &re), im.map(|im| matmul(a, &im)))
}

/// `A·B` for real `B` as two real products (one when `A` is real).
pub fn complex_times_real(a: &CMatrix, b: &RMatrix) -> CMatrix {
    let (re, im) = split(a);
    join(matmul(&re, b), im.map(|im| matmul(&im, b)))
}

/// Pseudo-inverse via SVD. Singular values below
/// `max(m, n)·ε·σ_max` are discarded.
pub fn pinv(b: &CMatrix) -> PseudoInverse {
    let (m, n) = b.shape();
    if m == 0 || n == 0 {
        return PseudoInverse {
            matrix: CMatrix::zeros(n, m),
            effective_rank: 0,
            truncated: false,
            inverse_condition: 0.0,
        };
    }
    let (u, s, v) = svd_thin(b);
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let cut = m.max(n) as f64 * f64::EPSILON * s_max;
    let mut out = CMatrix::zeros(n, m);
    let mut rank = 0;
    let mut s_min_kept = f64::INFINITY;
    for (r, &sr) in s.iter().enumerate() {
        if sr <= cut || sr == 0.0 {
            continue;
        }
        rank += 1;
        s_min_kept = s_min_kept.min(sr);
        let inv = 1.0 / sr;
        // out += v_r * inv * u_rᴴ
        for j in 0..m {
            let uj = u[(j, r)].conj() * inv;
            if uj == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                out[(i, j)] += v[(i, r)] * uj;
            }
        }
    }
    PseudoInverse {
        matrix: out,
        effective_rank: rank,
        truncated: rank < m.min(n),
        inverse_condition: if rank == 0 { 0.0 } else { s_min_kept / s_max },
    }
}

/// Symmetric eigendecomposition sorted by descending eigenvalue.
///
/// Ties keep the solver's original order. Each eigenvector is signed so
/// that its first significant component is positive.
pub fn sym_eig_desc(k: &RMatrix) -> (Vec<f64>, RMatrix) {
    let n = k.nrows();
    if n == 0 {
        return (Vec::new(), RMatrix::zeros(0, 0));
    }
    let fk = faer::Mat::<f64>::from_fn(n, n, |i, j| k[(i, j)]);
    let eig = fk
        .as_ref()
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigendecomposition did not converge");
    let s = eig.S().column_vector();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let u = eig.U();
    let eigenvectors = RMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eigenvectors.column(src);
        let amax = col.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let first = col
            .iter()
            .find(|x| x.abs() > 1e-8 * amax)
            .copied()
            .unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    (values, vectors)
}

fn largest_singular_value<T: SvdScalar>(a: &DMatrix<T>) -> f64 {
    let fa = faer::Mat::<T>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let s = fa.as_ref().singular_values().expect("SVD did not converge");
    s.iter().cloned().fold(0.0, f64::max)
}

/// Spectral norm (largest singular value) of a real matrix.
pub fn spectral_norm(a: &RMatrix) -> f64 {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0.0;
    }
    if m.min(n) <= EXACT_NORM_MAX_DIM {
        largest_singular_value(a)
    } else {
        power_iteration(
            n,
            |x| a * x,
            |y| a.transpose() * y,
            |v: &nalgebra::DVector<f64>| v.norm(),
        )
    }
}

/// Spectral norm of a complex matrix.
pub fn spectral_norm_complex(a: &CMatrix) -> f64 {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0.0;
    }
    if m.min(n) <= EXACT_NORM_MAX_DIM {
        largest_singular_value(a)
    } else {
        power_iteration(
            n,
            |x| a * x,
            |y| a.adjoint() * y,
            |v: &nalgebra::DVector<C64>| v.norm(),
        )
    }
}

fn power_iteration<T, F, G, N>(n: usize, apply: F, apply_adj: G, norm: N) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
    F: Fn(&nalgebra::DVector<T>) -> nalgebra::DVector<T>,
    G: Fn(&nalgebra::DVector<T>) -> nalgebra::DVector<T>,
    N: Fn(&nalgebra::DVector<T>) -> f64,
{
    // deterministic, non-degenerate start vector
    let mut x = nalgebra::DVector::<T>::from_fn(n, |i, _| {
        T::from_real(1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract())
    });
    let nx = norm(&x);
    x /= T::from_real(nx);
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = apply(&x);
        let z = apply_adj(&y);
        let nz = norm(&z);
        if nz == 0.0 {
            return 0.0;
        }
        let next = norm(&y);
        x = z / T::from_real(nz);
        if (next - sigma).abs() <= POWER_TOL * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// Promote a real matrix to complex.
pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| C64::new(x, 0.0))
}

/// Largest absolute imaginary part.
pub fn max_imag(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.im.abs()))
}

/// Entry-wise max-abs norm.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_full_rank_square_is_inverse() {
        let b = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 1.0), C64::new(0.5, 0.0), C64::new(0.0, -1.0), C64::new(3.0, 0.0)],
        );
        let p = pinv(&b);
        assert_eq!(p.effective_rank, 2);
        assert!(!p.truncated);
        let id = &p.matrix * &b;
        assert!((id - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn pinv_reports_rank_deficiency() {
        let col = CMatrix::from_fn(4, 1, |i, _| C64::new(i as f64 + 1.0, 0.0));
        let b = CMatrix::from_fn(4, 2, |i, _| col[(i, 0)]);
        let p = pinv(&b);
        assert_eq!(p.effective_rank, 1);
        assert!(p.truncated);
        // B B⁺ B = B
        assert!((&b * &p.matrix * &b - &b).norm() < 1e-10);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -7.0, 1.0]));
        assert!((spectral_norm(&a) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_exact_route() {
        let a = RMatrix::from_fn(30, 12, |i, j| ((i * 13 + j * 7) as f64 * 0.731).sin());
        let exact = spectral_norm(&a);
        let iter = power_iteration(
            12,
            |x| &a * x,
            |y| a.transpose() * y,
            |v: &nalgebra::DVector<f64>| v.norm(),
        );
        assert!((exact - iter).abs() < 1e-6 * exact);
    }

    #[test]
    fn eigenvalues_sorted_descending_with_sign_convention() {
        let k = RMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = sym_eig_desc(&k);
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        for c in 0..3 {
            let first = vecs.column(c).iter().find(|x| x.abs() > 1e-8).copied().unwrap();
            assert!(first > 0.0);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn svd_thin_recomposes_low_rank(m in 0usize..12, n in 0usize..24, r in 0usize..4, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = CMatrix::from_fn(m, r, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let b = CMatrix::from_fn(r, n, |_, _| C64::new(rng.random_range(-1.0..1.0), 0.0));
            let x = a * b;
            let (u, s, v) = svd_thin(&x);
            let sd = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(s.len(), |i, _| C64::new(s[i], 0.0)));
            let err = (&u * sd * v.adjoint() - &x).norm();
            proptest::prop_assert!(err < 1e-10 * (1.0 + x.norm()), "err {}", err);
            let xr = x.map(|z| z.re);
            let (u, s, v) = svd_thin(&xr);
            let sd = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(s));
            proptest::prop_assert!((&u * sd * v.transpose() - &xr).norm() < 1e-10 * (1.0 + xr.norm()));
            let p = pinv(&x);
            proptest::prop_assert!((&x * &p.matrix * &x - &x).norm() < 1e-9 * (1.0 + x.norm()));
        }

        #[test]
        fn matmul_matches_naive(m in 0usize..9, k in 0usize..9, n in 0usize..9, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = CMatrix::from_fn(m, k, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let b = CMatrix::from_fn(k, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            proptest::prop_assert!((matmul(&a, &b) - &a * &b).norm() < 1e-12);
            let (ar, br) = (a.map(|z| z.re), b.map(|z| z.im));
            proptest::prop_assert!((matmul(&ar, &br) - &ar * &br).norm() < 1e-12);
            proptest::prop_assert!((real_times_complex(&ar, &b) - to_complex(&ar) * &b).norm() < 1e-12);
            proptest::prop_assert!((complex_times_real(&a, &br) - &a * to_complex(&br)).norm() < 1e-12);
            let real = a.map(|z| C64::new(z.re, 0.0));
            proptest::prop_assert!((complex_times_real(&real, &br) - &real * to_complex(&br)).norm() < 1e-12);
        }
    }
}
