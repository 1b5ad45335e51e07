//! Multiscale POD.
//!
//! The temporal correlation matrix is split into scales by a bank of
//! complementary filters. Each scale is diagonalized on its own, the
//! eigenvectors of all scales are pooled by eigenvalue, orthonormalized by
//! QR, and the spatial structures follow from the data. Cross-scale terms of
//! the correlation are discarded.

use rayon::prelude::*;

use crate::basis::{BasisKind, BasisMatrix};
use crate::datamatrix::DataMatrix;
use crate::decomp::pod;
use crate::factorize::{complete_from_psi_as, Decomposition, DecompositionKind};
use crate::filtering::{design_fir, filter_correlation_response, kernel_from_taps, FilterKind, FirKernel, Window};
use crate::linalg::sym_eig_desc;
use crate::{spectral, Error, RMatrix, Result, C64};

/// Per-scale eigenvalues below this fraction of the global maximum are dropped.
pub const SCALE_RANK_TOL: f64 = 1e-10;
/// Response magnitude above which a bin counts as pass band.
pub const PASS_THRESHOLD: f64 = 0.5;
/// Relative tolerance on band edges coinciding.
const EDGE_TOL: f64 = 1e-9;
/// Largest `n_t` for which scales are processed in parallel.
const PARALLEL_MAX_NT: usize = 2048;

/// Ordered, non-overlapping frequency bands in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySplitting {
    bands: Vec<(f64, f64)>,
    nyquist: f64,
    contiguous: bool,
}

impl FrequencySplitting {
    pub fn new(bands: Vec<(f64, f64)>, f_s: f64) -> Result<Self> {
        if !(f_s > 0.0 && f_s.is_finite()) {
            return Err(Error::Domain(format!("sampling frequency must be positive, got {f_s}")));
        }
        let nyquist = f_s / 2.0;
        let tol = EDGE_TOL * nyquist;
        for (i, &(lo, hi)) in bands.iter().enumerate() {
            if !(lo >= 0.0 && lo < hi && hi <= nyquist + tol) {
                return Err(Error::Domain(format!(
                    "band {i} = [{lo}, {hi}] must satisfy 0 ≤ lo < hi ≤ {nyquist}"
                )));
            }
            if i > 0 && lo < bands[i - 1].1 - tol {
                return Err(Error::Domain(format!("band {i} overlaps or precedes band {}", i - 1)));
            }
        }
        let bands: Vec<(f64, f64)> = bands.into_iter().map(|(lo, hi)| (lo, hi.min(nyquist))).collect();
        let contiguous = !bands.is_empty()
            && bands[0].0 <= tol
            && (bands.last().unwrap().1 - nyquist).abs() <= tol
            && bands.windows(2).all(|w| (w[1].0 - w[0].1).abs() <= tol);
        Ok(FrequencySplitting {
            bands,
            nyquist,
            contiguous,
        })
    }

    /// Contiguous bands from interior edges `[f₁, …, f_{M−1}]`.
    pub fn from_edges(edges: &[f64], f_s: f64) -> Result<Self> {
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(edges);
        bounds.push(f_s / 2.0);
        Self::new(bounds.windows(2).map(|w| (w[0], w[1])).collect(), f_s)
    }

    /// One band per conjugate bin pair of an `n_t`-sample record.
    pub fn per_bin(n_t: usize, f_s: f64) -> Result<Self> {
        let df = f_s / n_t as f64;
        // one edge between consecutive folded bins 0, …, ⌊n_t/2⌋
        let edges: Vec<f64> = (0..n_t / 2).map(|k| (k as f64 + 0.5) * df).collect();
        Self::from_edges(&edges, f_s)
    }

    /// Parse `lo:hi,lo:hi,…`; an empty string gives no bands.
    pub fn parse(text: &str, f_s: f64) -> Result<Self> {
        let mut bands = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("band '{part}' is not lo:hi")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("band '{part}' has a non-numeric edge")))
            };
            bands.push((num(lo)?, num(hi)?));
        }
        Self::new(bands, f_s)
    }

    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn nyquist(&self) -> f64 {
        self.nyquist
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BankMode {
    Fir,
    Ideal,
}

impl std::str::FromStr for BankMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fir" => Ok(BankMode::Fir),
            "ideal" => Ok(BankMode::Ideal),
            other => Err(Error::Config(format!("unknown bank mode '{other}'"))),
        }
    }
}

/// One filter per band, as kernels (FIR) and as responses on the record.
#[derive(Clone, Debug)]
pub struct ScaleBank {
    pub mode: BankMode,
    pub bands: Vec<(f64, f64)>,
    /// Present in FIR mode.
    pub kernels: Option<Vec<FirKernel>>,
    /// `Ĥ_m` on the `n_t` bins, one vector per band.
    pub responses: Vec<Vec<C64>>,
    /// Pass-band bin count `n_m` of each band.
    pub pass_bins: Vec<usize>,
    pub contiguous: bool,
    /// Transition width in Hz, zero for ideal masks.
    pub transition: f64,
    f_s: f64,
}

impl ScaleBank {
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// `max_k |Σ_m Ĥ_m[k] − 1|`.
    pub fn sum_deviation(&self) -> f64 {
        let n = self.responses.first().map_or(0, Vec::len);
        (0..n)
            .map(|k| {
                let s: C64 = self.responses.iter().map(|r| r[k]).sum();
                (s - C64::new(1.0, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |Ĥ_i[k] Ĥ_j[k]|` over pairs `i ≠ j`, skipping bins within the
    /// transition width of any band edge (where adjacent responses cross).
    pub fn max_pairwise_product(&self) -> f64 {
        let n = self.responses.first().map_or(0, Vec::len);
        let half = 0.5 * self.transition;
        let edges: Vec<f64> = self.bands.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let f = spectral::folded_frequency(k, n, self.f_s);
            if self.transition > 0.0 && edges.iter().any(|e| (f - e).abs() <= half) {
                continue;
            }
            for i in 0..self.len() {
                for j in i + 1..self.len() {
                    worst = worst.max((self.responses[i][k] * self.responses[j][k]).norm());
                }
            }
        }
        worst
    }
}

fn allpass_kernel(order: usize) -> Result<FirKernel> {
    let mut taps = vec![0.0; order];
    taps[order / 2] = 1.0;
    kernel_from_taps(taps, FilterKind::Lowpass)
}

/// Build the filter bank for `split` on a record of `n_t` samples.
pub fn build_scale_bank(
    split: &FrequencySplitting,
    f_s: f64,
    n_t: usize,
    fir_order: usize,
    mode: BankMode,
) -> Result<ScaleBank> {
    if (split.nyquist - f_s / 2.0).abs() > EDGE_TOL * f_s {
        return Err(Error::Domain(format!(
            "splitting was built for f_s = {}, bank requested at {f_s}",
            2.0 * split.nyquist
        )));
    }
    if split.is_empty() {
        return Err(Error::Domain("frequency splitting has no bands".into()));
    }
    let df = f_s / n_t as f64;
    let tol = EDGE_TOL * split.nyquist;
    for (i, &(lo, hi)) in split.bands.iter().enumerate() {
        // bands touching 0 or Nyquist also cover their mirror image
        let mirrored = usize::from(lo <= tol) + usize::from(hi >= split.nyquist - tol);
        let width = (hi - lo) * if mirrored > 0 { 2.0 } else { 1.0 };
        if width < df * (1.0 - EDGE_TOL) {
            return Err(Error::Domain(format!(
                "band {i} = [{lo}, {hi}] Hz is narrower than one DFT bin ({df} Hz)"
            )));
        }
    }
    let (kernels, responses, transition) = match mode {
        BankMode::Fir => {
            if fir_order.is_multiple_of(2) || fir_order >= n_t {
                return Err(Error::Domain(format!(
                    "FIR order must be odd and below n_t = {n_t}, got {fir_order}"
                )));
            }
            let w = Window::Hamming;
            let norm = |f: f64| f / f_s;
            let kernels: Vec<FirKernel> = if split.contiguous {
                let edges: Vec<f64> = split.bands[1..].iter().map(|b| norm(b.0)).collect();
                let m = split.len();
                (0..m)
                    .map(|i| match (i, m) {
                        (_, 1) => allpass_kernel(fir_order),
                        (0, _) => design_fir(FilterKind::Lowpass, &[edges[0]], fir_order, w),
                        (i, m) if i == m - 1 => design_fir(FilterKind::Highpass, &[edges[i - 1]], fir_order, w),
                        (i, _) => design_fir(FilterKind::Bandpass, &[edges[i - 1], edges[i]], fir_order, w),
                    })
                    .collect::<Result<_>>()?
            } else {
                split
                    .bands
                    .iter()
                    .map(|&(lo, hi)| {
                        let (at_zero, at_nyq) = (lo <= tol, hi >= split.nyquist - tol);
                        match (at_zero, at_nyq) {
                            (true, true) => allpass_kernel(fir_order),
                            (true, false) => design_fir(FilterKind::Lowpass, &[norm(hi)], fir_order, w),
                            (false, true) => design_fir(FilterKind::Highpass, &[norm(lo)], fir_order, w),
                            (false, false) => design_fir(FilterKind::Bandpass, &[norm(lo), norm(hi)], fir_order, w),
                        }
                    })
                    .collect::<Result<_>>()?
            };
            let responses = kernels.iter().map(|k| k.response(n_t)).collect::<Result<Vec<_>>>()?;
            (Some(kernels), responses, w.transition_width(fir_order) * f_s)
        }
        BankMode::Ideal => {
            let responses = split
                .bands
                .iter()
                .map(|&(lo, hi)| {
                    let closed = hi >= split.nyquist - tol;
                    (0..n_t)
                        .map(|k| {
                            let f = spectral::folded_frequency(k, n_t, f_s);
                            let inside = f >= lo - tol && (f < hi - tol || (closed && f <= hi + tol));
                            C64::new(if inside { 1.0 } else { 0.0 }, 0.0)
                        })
                        .collect()
                })
                .collect();
            (None, responses, 0.0)
        }
    };
    let pass_bins = responses
        .iter()
        .map(|r: &Vec<C64>| r.iter().filter(|h| h.norm() >= PASS_THRESHOLD).count())
        .collect();
    Ok(ScaleBank {
        mode,
        bands: split.bands.clone(),
        kernels,
        responses,
        pass_bins,
        contiguous: split.contiguous,
        transition,
        f_s,
    })
}

#[derive(Clone, Debug)]
pub struct MpodResult {
    /// Modes by descending amplitude.
    pub decomposition: Decomposition,
    /// Band index of each mode.
    pub scale_of_mode: Vec<usize>,
    /// Eigenvalues kept in each scale, descending.
    pub per_scale_lambdas: Vec<Vec<f64>>,
    /// Pooled eigenvectors in eigenvalue order, before QR.
    pub initial_basis: RMatrix,
    /// Scale of each column of `initial_basis`.
    pub initial_scales: Vec<usize>,
    pub bank: Option<ScaleBank>,
    /// `‖D‖_F²`.
    pub data_energy: f64,
    pub notes: Vec<String>,
}

fn note(notes: &mut Vec<String>, msg: String) {
    log::info!("{msg}");
    notes.push(msg);
}

/// Multiscale POD of `d` over the bands of `split`.
pub fn mpod(d: &DataMatrix, split: &FrequencySplitting, fir_order: usize, mode: BankMode) -> Result<MpodResult> {
    let n_t = d.n_t();
    let data_energy = d.values().norm_squared();
    let mut notes = Vec::new();
    if split.is_empty() {
        note(&mut notes, "empty frequency splitting; falling back to plain POD".into());
        let mut dec = pod(d)?;
        dec.kind = DecompositionKind::Mpod;
        dec.notes.extend(notes.iter().cloned());
        let r = dec.rank();
        let lambdas = dec.sigma.iter().map(|s| s * s).collect();
        let basis = dec.psi.map(|z| z.re);
        return Ok(MpodResult {
            decomposition: dec,
            scale_of_mode: vec![0; r],
            per_scale_lambdas: vec![lambdas],
            initial_basis: basis,
            initial_scales: vec![0; r],
            bank: None,
            data_energy,
            notes,
        });
    }
    if mode == BankMode::Fir && n_t < 4 * fir_order {
        note(
            &mut notes,
            format!("n_t = {n_t} is below 4·fir_order = {}; periodic filtering of the correlation may be inaccurate", 4 * fir_order),
        );
    }

    let k = crate::linalg::matmul(&d.values().transpose(), d.values());
    let bank = build_scale_bank(split, d.meta().f_s, n_t, fir_order, mode)?;

    let eig_scale = |resp: &Vec<C64>| -> Result<(Vec<f64>, RMatrix)> {
        let km = filter_correlation_response(&k, resp)?.k_h;
        Ok(sym_eig_desc(&km))
    };
    let per_scale: Vec<(Vec<f64>, RMatrix)> = if n_t <= PARALLEL_MAX_NT {
        bank.responses.par_iter().map(eig_scale).collect::<Result<_>>()?
    } else {
        bank.responses.iter().map(eig_scale).collect::<Result<_>>()?
    };

    let global_max = per_scale
        .iter()
        .filter_map(|(l, _)| l.first().cloned())
        .fold(0.0, f64::max);
    let mut lambdas = Vec::new();
    let mut columns: Vec<(usize, usize)> = Vec::new();
    let mut per_scale_lambdas = Vec::with_capacity(per_scale.len());
    for (m, (l, _)) in per_scale.iter().enumerate() {
        let significant = l.iter().take_while(|&&x| global_max > 0.0 && x > SCALE_RANK_TOL * global_max).count();
        let keep = significant.min(bank.pass_bins[m]);
        if keep < bank.pass_bins[m] {
            note(
                &mut notes,
                format!("scale {m} contributes {keep} of at most {} modes", bank.pass_bins[m]),
            );
        }
        per_scale_lambdas.push(l[..keep].to_vec());
        for j in 0..keep {
            lambdas.push(l[j]);
            columns.push((m, j));
        }
    }
    if columns.is_empty() {
        note(&mut notes, "no scale carries energy; falling back to plain POD".into());
        let mut res = mpod(d, &FrequencySplitting { bands: Vec::new(), ..split.clone() }, fir_order, mode)?;
        res.notes.splice(0..0, notes);
        return Ok(res);
    }

    // global descending order, ties by pooled index
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    order.truncate(n_t);
    let initial_basis = RMatrix::from_fn(n_t, order.len(), |i, c| {
        let (m, j) = columns[order[c]];
        per_scale[m].1[(i, j)]
    });
    let initial_scales: Vec<usize> = order.iter().map(|&c| columns[c].0).collect();

    let qr = initial_basis.clone().qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }

    let basis = BasisMatrix::from_real(&q, BasisKind::Eigenfunction)?;
    let mut dec = complete_from_psi_as(d, &basis, DecompositionKind::Mpod)?;
    let scale_of_mode = dec.order.iter().map(|&c| initial_scales[c]).collect();
    if !bank.contiguous {
        note(&mut notes, "bands do not tile the spectrum; the decomposition is not lossless".into());
    }
    dec.notes.extend(notes.iter().cloned());
    Ok(MpodResult {
        decomposition: dec,
        scale_of_mode,
        per_scale_lambdas,
        initial_basis,
        initial_scales,
        bank: Some(bank),
        data_energy,
        notes,
    })
}

/// Energy captured per band, as fractions of `‖D‖_F²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleEnergies {
    pub per_band: Vec<f64>,
    /// `1 − Σ per_band`: energy outside every band or lost with the mixed terms.
    pub discarded: f64,
}

pub fn scale_energies(res: &MpodResult) -> ScaleEnergies {
    let n_bands = res.scale_of_mode.iter().map(|&m| m + 1).max().unwrap_or(0).max(res.per_scale_lambdas.len());
    let mut per_band = vec![0.0; n_bands];
    if res.data_energy > 0.0 {
        for (r, &m) in res.scale_of_mode.iter().enumerate() {
            per_band[m] += res.decomposition.sigma[r].powi(2) / res.data_energy;
        }
    }
    let captured: f64 = per_band.iter().sum();
    ScaleEnergies {
        per_band,
        discarded: if res.data_energy > 0.0 { (1.0 - captured).max(0.0) } else { 0.0 },
    }
}
