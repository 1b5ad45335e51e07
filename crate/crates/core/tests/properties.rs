//! Invariants of the public API as randomized properties.

use std::f64::consts::PI;

use modalkit::basis::{self, BasisKind, BasisMatrix, ProjectionMode, Projector};
use modalkit::clio::{self, packed};
use modalkit::datamatrix::{self, convergence_curve};
use modalkit::filtering::{self, FilterKind, Window};
use modalkit::mpod::{self, BankMode, FrequencySplitting};
use modalkit::synthdata::{self, PlantedMode, TemporalShape};
use modalkit::{decomp, factorize, spectral};
use modalkit::{CMatrix, DataMatrix, GridMeta, NormKind, RMatrix, C64};
use ndarray::Array3;
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

fn matrix(rows: usize, cols: usize, seed: u64) -> RMatrix {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    RMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn data(rows: usize, cols: usize, seed: u64) -> DataMatrix {
    DataMatrix::from_matrix(matrix(rows, cols, seed), 1.0).unwrap()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn identity_gap(m: &CMatrix) -> f64 {
    max_abs(&(m - CMatrix::identity(m.nrows(), m.ncols())))
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn flatten_unflatten_are_inverse(n_x in 1usize..6, n_y in 1usize..6, n_c in 1usize..4, seed in any::<u64>()) {
        let meta = GridMeta::new(n_x, n_y, n_c, 1.0, 1.0).unwrap();
        let m = matrix(n_x * n_y * n_c, 1, seed);
        let field = Array3::from_shape_fn((n_x, n_y, n_c), |(i, j, c)| m[(i + n_x * (j + n_y * c), 0)]);
        let v = datamatrix::flatten(&field, &meta).unwrap();
        prop_assert_eq!(datamatrix::unflatten(&v, &meta).unwrap(), field);
        let back = datamatrix::flatten(&datamatrix::unflatten(m.as_slice(), &meta).unwrap(), &meta).unwrap();
        prop_assert_eq!(back.as_slice(), m.as_slice());
    }

    #[test]
    fn pod_energy_and_monotone_convergence(n_s in 2usize..24, n_t in 2usize..24, seed in any::<u64>()) {
        let d = data(n_s, n_t, seed);
        let p = decomp::pod(&d).unwrap();
        let e = datamatrix::total_energy(&d);
        let report = datamatrix::energy_report(&d, &p, NormKind::Frobenius).unwrap();
        let sum: f64 = report.per_mode.iter().sum();
        prop_assert!((sum - e).abs() <= 1e-10 * e, "{} vs {} sigma {:?} per {:?}", sum, e, p.sigma, report.per_mode);
        prop_assert!((report.total_energy - e).abs() <= 1e-15 * e);
        for norm in [NormKind::Spectral, NormKind::Frobenius] {
            let c = convergence_curve(&d, &p, norm).unwrap();
            prop_assert!(c.direct.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn pod_is_orthonormal_and_matches_svd(n_s in 2usize..30, n_t in 2usize..30, seed in any::<u64>()) {
        let d = data(n_s, n_t, seed);
        let p = decomp::pod(&d).unwrap();
        prop_assert!(identity_gap(&(p.phi.adjoint() * &p.phi)) < 1e-8);
        prop_assert!(identity_gap(&(p.psi.adjoint() * &p.psi)) < 1e-8);
        let sv = sorted_desc(nalgebra::SVD::new(d.values().clone(), false, false).singular_values.as_slice());
        for (a, b) in p.sigma.iter().zip(&sv) {
            prop_assert!((a - b).abs() <= 1e-8 * sv[0]);
        }
    }

    #[test]
    fn fourier_basis_is_unitary_with_period_four(n in 1usize..48) {
        let f = basis::fourier_basis(n).unwrap();
        let psi = f.columns();
        prop_assert!(identity_gap(&(psi.adjoint() * psi)) < 1e-12);
        prop_assert!(identity_gap(&(psi * psi.adjoint())) < 1e-12);
        let sq = psi * psi;
        prop_assert!(identity_gap(&(&sq * &sq)) < 1e-10);
    }

    #[test]
    fn shortcut_projection_matches_least_squares(n in 2usize..32, m in 1usize..6, seed in any::<u64>()) {
        let f = basis::fourier_basis(n).unwrap();
        let x = matrix(n, m, seed).map(|v| C64::new(v, 0.0));
        let a = Projector::new(f.clone(), ProjectionMode::OrthonormalShortcut).unwrap().project(&x).unwrap();
        let b = Projector::new(f, ProjectionMode::LeastSquares).unwrap().project(&x).unwrap();
        prop_assert!(max_abs(&(a.coefficients - b.coefficients)) < 1e-10);
    }

    #[test]
    fn autoencoder_is_a_projector(n in 3usize..20, k in 1usize..3, seed in any::<u64>()) {
        let b = BasisMatrix::from_real(&matrix(n, k, seed), BasisKind::Custom).unwrap();
        let p = basis::autoencoder(&b);
        let eig = nalgebra::SymmetricEigen::new(p.clone()).eigenvalues;
        for l in eig.iter() {
            prop_assert!(l.abs() < 1e-8 || (l - 1.0).abs() < 1e-8, "eigenvalue {}", l);
        }
    }

    #[test]
    fn phi_and_psi_completions_agree(n_t in 2usize..16, extra in 0usize..8, seed in any::<u64>()) {
        let d = data(n_t + extra, n_t, seed);
        let f = basis::fourier_basis(n_t).unwrap();
        let fwd = factorize::complete_from_psi(&d, &f).unwrap();
        let keep: Vec<usize> = (0..fwd.rank()).filter(|&r| !fwd.degenerate[r]).collect();
        let phi = CMatrix::from_fn(d.n_s(), keep.len(), |i, j| fwd.phi[(i, keep[j])]);
        let back = factorize::complete_from_phi(&d, &BasisMatrix::new(phi, BasisKind::Custom).unwrap()).unwrap();
        for (j, &r) in keep.iter().enumerate() {
            let col = back.order.iter().position(|&o| o == j).unwrap();
            let ip = (fwd.psi.column(r).adjoint() * back.psi.column(col))[(0, 0)].norm();
            prop_assert!(ip > 1.0 - 1e-8, "mode {}: {}", r, ip);
        }
    }

    #[test]
    fn amplitudes_ignore_column_phases(n_t in 2usize..20, n_s in 2usize..10, seed in any::<u64>()) {
        let d = data(n_s, n_t, seed);
        let f = basis::fourier_basis(n_t).unwrap();
        let mut cols = f.columns().clone();
        for (j, mut c) in cols.column_iter_mut().enumerate() {
            c *= C64::from_polar(1.0, 0.7 * j as f64 + seed as f64 % 3.0);
        }
        let g = BasisMatrix::new(cols, BasisKind::Custom).unwrap();
        let a = sorted_desc(&factorize::complete_from_psi(&d, &f).unwrap().sigma);
        let b = sorted_desc(&factorize::complete_from_psi(&d, &g).unwrap().sigma);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * a[0].max(1.0));
        }
    }

    #[test]
    fn dft_reconstruction_is_real_and_shift_invariant(n_t in 2usize..24, n_s in 1usize..8, shift in 0usize..24, seed in any::<u64>()) {
        let d = data(n_s, n_t, seed);
        let f = decomp::dft_decomposition(&d).unwrap();
        let z = factorize::reconstruct_complex(&f, f.rank()).unwrap();
        prop_assert!(z.iter().map(|c| c.im.abs()).fold(0.0, f64::max) < 1e-10);
        let shifted = d.with_values(RMatrix::from_fn(n_s, n_t, |i, k| d.values()[(i, (k + shift) % n_t)])).unwrap();
        let a = sorted_desc(&f.sigma);
        let b = sorted_desc(&decomp::dft_decomposition(&shifted).unwrap().sigma);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * a[0]);
        }
    }

    #[test]
    fn dmd_recovers_separated_poles(r1 in 0.9f64..1.0, a1 in 0.3f64..1.0, r2 in 0.85f64..1.0, a2 in 1.6f64..2.6, seed in any::<u64>()) {
        let (n_s, n_t) = (20, 64);
        let shapes = matrix(n_s, 4, seed);
        let poles = [C64::from_polar(r1, a1), C64::from_polar(r2, a2)];
        // each conjugate pair needs two independent shapes
        let modes: Vec<PlantedMode> = (0..4)
            .map(|j| PlantedMode {
                sigma: 1.0 + j as f64,
                shape: shapes.column(j).iter().cloned().collect(),
                temporal: TemporalShape::Pole { lambda: poles[j / 2], phase: (j % 2) as f64 * PI / 2.0 },
            })
            .collect();
        let planted = synthdata::planted_modes(n_s, n_t, 1.0, &modes).unwrap();
        let eig = decomp::dmd_eigenvalues(&planted.data, Some(4)).unwrap();
        for p in poles.iter().flat_map(|p| [*p, p.conj()]) {
            let err = eig.lambdas.iter().map(|l| (l - p).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(err < 1e-6, "pole {} missed by {}", p, err);
        }
    }

    #[test]
    fn stationary_pod_modes_are_harmonics(n_t in prop::sample::select(vec![32usize, 48, 64]), seed in any::<u64>()) {
        // evenly spaced phases with distinct multipliers make K exactly circulant
        let n_s = 4 * n_t;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let mut bins: Vec<usize> = rand::seq::index::sample(&mut rng, n_t / 2 - 1, 3).into_iter().map(|b| b + 1).collect();
        bins.sort();
        let amps = [3.0, 2.0, 1.0];
        let mult = [1usize, 2, 4];
        let d = DataMatrix::from_matrix(
            RMatrix::from_fn(n_s, n_t, |i, k| {
                (0..3).map(|j| {
                    let theta = 2.0 * PI * (mult[j] * i) as f64 / n_s as f64;
                    amps[j] * (2.0 * PI * (bins[j] * k) as f64 / n_t as f64 + theta).cos()
                }).sum()
            }),
            1.0,
        ).unwrap();
        let p = decomp::pod(&d).unwrap();
        let s1 = p.sigma[0];
        for r in (0..p.rank()).filter(|&r| p.sigma[r] > 1e-6 * s1) {
            let spec = spectral::analysis(&p.psi.column(r).iter().cloned().collect::<Vec<_>>());
            let pair = (0..=n_t / 2).map(|k| {
                let e = spec[k].norm_sqr();
                if k == 0 || 2 * k == n_t { e } else { e + spec[n_t - k].norm_sqr() }
            }).fold(0.0, f64::max);
            prop_assert!(pair >= 0.99, "mode {} pair energy {}", r, pair);
        }
    }

    #[test]
    fn filtering_is_linear(n_s in 1usize..6, n_t in 16usize..64, a in -2.0f64..2.0, b in -2.0f64..2.0, seed in any::<u64>()) {
        let h = filtering::design_fir(FilterKind::Lowpass, &[0.2], 11, Window::Hamming).unwrap();
        let d1 = data(n_s, n_t, seed);
        let d2 = data(n_s, n_t, seed ^ 1);
        let mix = d1.with_values(d1.values() * a + d2.values() * b).unwrap();
        let lhs = filtering::filter_rows(&mix, &h).unwrap();
        let rhs = filtering::filter_rows(&d1, &h).unwrap().values() * a + filtering::filter_rows(&d2, &h).unwrap().values() * b;
        prop_assert!((lhs.values() - rhs).amax() < 1e-10);
    }

    #[test]
    fn cross_spectral_diagonal_is_row_power(n_s in 1usize..10, n_t in 2usize..32, seed in any::<u64>()) {
        let d = data(n_s, n_t, seed);
        let k = d.values().transpose() * d.values();
        let kf = filtering::cross_spectral_density(&k).unwrap();
        let mut power = vec![0.0; n_t];
        for i in 0..n_s {
            let row: Vec<C64> = d.values().row(i).iter().map(|&x| C64::new(x, 0.0)).collect();
            for (p, z) in power.iter_mut().zip(spectral::analysis(&row)) {
                *p += z.norm_sqr();
            }
        }
        for (j, p) in power.iter().enumerate() {
            prop_assert!((kf[(j, j)].re - p).abs() < 1e-10 * (1.0 + p) && kf[(j, j)].im.abs() < 1e-10 * (1.0 + p));
        }
    }

    #[test]
    fn filtered_pod_respects_stop_band(n_s in 4usize..20, n_t in prop::sample::select(vec![64usize, 96, 128]), seed in any::<u64>()) {
        let h = filtering::design_fir(FilterKind::Lowpass, &[0.15], 31, Window::Hamming).unwrap();
        let d = data(n_s, n_t, seed);
        let f = filtering::filter_rows(&d, &h).unwrap();
        let p = decomp::pod(&f).unwrap();
        let stop = h.stop_band(n_t);
        let rho = filtering::stop_band_power_ratio(&h.response(n_t).unwrap(), &stop);
        let norm2 = modalkit::linalg::spectral_norm(d.values()).powi(2);
        for r in 0..p.rank() {
            let spec = spectral::analysis(&p.psi.column(r).iter().cloned().collect::<Vec<_>>());
            let leak: f64 = spec.iter().zip(&stop).filter(|(_, &s)| s).map(|(z, _)| z.norm_sqr()).sum();
            prop_assert!(p.sigma[r].powi(2) * leak / norm2 <= rho + 1e-8);
        }
    }

    #[test]
    fn ideal_mpod_invariants(n_s in 4usize..24, n_t in prop::sample::select(vec![32usize, 48, 64]), e1 in 0.05f64..0.2, e2 in 0.25f64..0.45, seed in any::<u64>()) {
        let d = data(n_s, n_t, seed);
        let split = FrequencySplitting::from_edges(&[e1, e2], 1.0).unwrap();
        let res = mpod::mpod(&d, &split, 1, BankMode::Ideal).unwrap();
        let psi = &res.decomposition.psi;
        prop_assert!(identity_gap(&(psi.adjoint() * psi)) < 1e-10);
        let rec = factorize::reconstruct(&res.decomposition, res.decomposition.rank()).unwrap();
        prop_assert!((rec - d.values()).norm() <= 1e-8 * d.values().norm());

        let b = &res.initial_basis;
        for i in 0..b.ncols() {
            for j in 0..i {
                if res.initial_scales[i] != res.initial_scales[j] {
                    prop_assert!(b.column(i).dot(&b.column(j)).abs() < 1e-8);
                }
            }
        }
        let bank = res.bank.as_ref().unwrap();
        for (m, &n_m) in bank.pass_bins.iter().enumerate() {
            prop_assert!(res.scale_of_mode.iter().filter(|&&s| s == m).count() <= n_m);
        }

        let pod = decomp::pod(&d).unwrap();
        let mp = sorted_desc(&res.decomposition.sigma);
        let (mut a, mut c) = (0.0, 0.0);
        for r in 0..mp.len().min(pod.rank()) {
            a += mp[r] * mp[r];
            c += pod.sigma[r] * pod.sigma[r];
            prop_assert!(a <= c * (1.0 + 1e-12));
        }
    }

    #[test]
    fn packed_round_trip_is_bit_exact(n_s in 1usize..20, n_t in 1usize..20, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let d = data(n_s, n_t, seed);
        let m = clio::save_dataset(&d, dir.path()).unwrap();
        let back = clio::load_dataset(&m).unwrap();
        prop_assert_eq!(back.values(), d.values());
        let (raw, header) = packed::read_packed(&dir.path().join("data.mdk")).unwrap();
        prop_assert_eq!((header.n_s, header.n_t), (n_s, n_t));
        prop_assert_eq!(&raw, d.values());
    }

    #[test]
    fn csv_round_trip_within_formatting(n_x in 1usize..5, n_y in 1usize..5, n_t in 1usize..6, seed in any::<u64>()) {
        let dir = tempfile::tempdir().unwrap();
        let meta = GridMeta::new(n_x, n_y, 2, 0.5, 100.0).unwrap();
        let d = DataMatrix::new(matrix(meta.n_s(), n_t, seed) * 1e3, meta).unwrap();
        let m = clio::save_dataset_csv(&d, dir.path()).unwrap();
        let back = clio::load_dataset(&m).unwrap();
        for (a, b) in back.values().iter().zip(d.values().iter()) {
            prop_assert!((a - b).abs() <= 1e-15 * b.abs().max(f64::MIN_POSITIVE));
        }
    }
}

#[test]
fn poiseuille_amplitudes_decay() {
    for n in 1..=10 {
        assert_eq!(synthdata::spatial_eigenfunction(n, 1.0), 0.0);
        assert_eq!(synthdata::spatial_eigenfunction(n, -1.0), 0.0);
    }
    for w in [0.1, 1.0, 4.0, 10.0, 100.0] {
        let s: Vec<f64> = (1..=20).map(|n| synthdata::eigen_amplitude(n, w, 60.0)).collect();
        assert!(s.windows(2).all(|p| p[1] < p[0]), "W = {w}");
    }
    assert!(synthdata::eigen_amplitude(1, 100.0, 60.0) < synthdata::eigen_amplitude(1, 10.0, 60.0));
}
