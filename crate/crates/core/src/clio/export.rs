//! CSV artifacts of a decomposition.
//!
//! Every file is UTF-8 with a header row; numbers use `{:.16e}`, which
//! round-trips `f64`. Modes are written by descending amplitude and
//! numbered from 0.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::datamatrix::DataMatrix;
use crate::factorize::{descending_order, Decomposition};
use crate::mpod::MpodResult;
use crate::spectral;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, Default)]
pub struct ExportSummary {
    pub files: Vec<PathBuf>,
    /// Modes with `psi`/`phi` files.
    pub modes: usize,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Relative Frobenius residual `‖D − Σ_{r<r̃} σ_r φ_r ψ_rᵀ‖_F / ‖D‖_F`
/// for `r̃ = 0..=r_max`, streamed row by row in `O(n_t)` memory per
/// thread.
pub fn frobenius_convergence(d: &DataMatrix, dec: &Decomposition, r_max: usize) -> Result<Vec<f64>> {
    if dec.n_s() != d.n_s() || dec.n_t() != d.n_t() {
        return Err(Error::Shape(format!(
            "decomposition is {}×{}, data is {}×{}",
            dec.n_s(),
            dec.n_t(),
            d.n_s(),
            d.n_t()
        )));
    }
    let r_max = r_max.min(dec.rank());
    let n_t = d.n_t();
    let sums = (0..d.n_s())
        .into_par_iter()
        .fold(
            || (vec![0.0; r_max + 1], vec![C64::new(0.0, 0.0); n_t]),
            |(mut acc, mut res), i| {
                for (k, z) in res.iter_mut().enumerate() {
                    *z = C64::new(d.values()[(i, k)], 0.0);
                }
                acc[0] += res.iter().map(|z| z.norm_sqr()).sum::<f64>();
                for r in 0..r_max {
                    let a = dec.phi[(i, r)] * dec.sigma[r];
                    let psi = dec.psi.column(r);
                    for (z, p) in res.iter_mut().zip(psi.iter()) {
                        *z -= a * p;
                    }
                    acc[r + 1] += res.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
                (acc, res)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0.0; r_max + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    if sums[0] == 0.0 {
        return Err(Error::Degenerate("data matrix has zero norm".into()));
    }
    Ok(sums.iter().map(|s| (s / sums[0]).sqrt()).collect())
}

/// Write `sigmas.csv`, `convergence.csv` and, for the first `n_modes`
/// modes, `psi_###.csv`, `phi_###.csv` and `psi_spectrum_###.csv`.
pub fn save_decomposition(dec: &Decomposition, d: &DataMatrix, out_dir: &Path, n_modes: usize) -> Result<ExportSummary> {
    save_sorted(dec, d, out_dir, n_modes, &descending_order(&dec.sigma))
}

/// [`save_decomposition`] plus `scale_of_mode.csv`.
pub fn save_mpod(res: &MpodResult, d: &DataMatrix, out_dir: &Path, n_modes: usize) -> Result<ExportSummary> {
    let perm = descending_order(&res.decomposition.sigma);
    let mut summary = save_sorted(&res.decomposition, d, out_dir, n_modes, &perm)?;
    let bands = res.bank.as_ref().map(|b| b.bands.clone());
    let path = out_dir.join("scale_of_mode.csv");
    let rows = perm.iter().enumerate().map(|(i, &p)| {
        let m = res.scale_of_mode[p];
        let (lo, hi) = bands.as_ref().map_or((f64::NAN, f64::NAN), |b| b[m]);
        vec![i.to_string(), m.to_string(), num(lo), num(hi)]
    });
    summary.files.push(write_csv(&path, &["index", "scale", "band_lo_hz", "band_hi_hz"], rows)?);
    Ok(summary)
}

fn save_sorted(dec: &Decomposition, d: &DataMatrix, out_dir: &Path, n_modes: usize, perm: &[usize]) -> Result<ExportSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let dec = dec.permuted(perm);
    let energy = d.values().norm_squared();
    let scale = (d.n_s() * d.n_t()) as f64;
    let mut files = Vec::new();

    let mut cumulative = 0.0;
    let rows: Vec<Vec<String>> = dec
        .sigma
        .iter()
        .enumerate()
        .map(|(r, &s)| {
            cumulative += s * s;
            vec![
                r.to_string(),
                num(s),
                num(s * s / scale),
                num(if energy > 0.0 { cumulative / energy } else { 0.0 }),
                dec.order[r].to_string(),
            ]
        })
        .collect();
    files.push(write_csv(
        &out_dir.join("sigmas.csv"),
        &["index", "sigma", "sigma_hat_sq", "cumulative_energy", "source_index"],
        rows,
    )?);

    let n = n_modes.min(dec.rank());
    let curve = frobenius_convergence(d, &dec, n)?;
    files.push(write_csv(
        &out_dir.join("convergence.csv"),
        &["r", "error"],
        curve.iter().enumerate().map(|(r, e)| vec![r.to_string(), num(*e)]),
    )?);

    let f_s = d.meta().f_s;
    let n_t = d.n_t();
    let freqs = spectral::bin_frequencies(n_t, f_s);
    let mut bins: Vec<usize> = (0..n_t).collect();
    bins.sort_by(|&a, &b| freqs[a].total_cmp(&freqs[b]));
    let per_mode: Vec<Vec<PathBuf>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let psi: Vec<C64> = dec.psi.column(r).iter().cloned().collect();
            let spec = spectral::analysis(&psi);
            Ok(vec![
                write_csv(
                    &out_dir.join(format!("psi_{r:03}.csv")),
                    &["t", "re", "im"],
                    psi.iter().enumerate().map(|(k, z)| vec![num(k as f64 / f_s), num(z.re), num(z.im)]),
                )?,
                write_csv(
                    &out_dir.join(format!("phi_{r:03}.csv")),
                    &["index", "re", "im"],
                    dec.phi.column(r).iter().enumerate().map(|(i, z)| vec![i.to_string(), num(z.re), num(z.im)]),
                )?,
                write_csv(
                    &out_dir.join(format!("psi_spectrum_{r:03}.csv")),
                    &["f", "magnitude"],
                    bins.iter().map(|&b| vec![num(freqs[b]), num(spec[b].norm())]),
                )?,
            ])
        })
        .collect::<Result<_>>()?;
    files.extend(per_mode.into_iter().flatten());
    Ok(ExportSummary { files, modes: n })
}

/// Amplitudes from a `sigmas.csv`.
pub fn read_sigmas(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let s = rec.get(1).unwrap_or("");
        out.push(s.parse::<f64>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 2,
            message: format!("sigma '{s}': {e}"),
        })?);
    }
    Ok(out)
}
