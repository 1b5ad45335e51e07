//! FFT routines expressed in terms of the unitary Fourier matrix
//! `Ψ_F[m, n] = exp(2πj·m·n/N)/√N`.
//!
//! Library FFTs use the conjugate sign, so the forward transform of a row
//! vector `d` is `d Ψ̄_F` and the inverse is `x Ψ_F`. All helpers here are
//! scaled so that they agree with the dense matrix products to round-off.

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::{CMatrix, RMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    /// Multiplication by the conjugated Fourier matrix (library forward FFT).
    Analysis,
    /// Multiplication by the Fourier matrix (library inverse FFT).
    Synthesis,
}

fn transform_lines(lines: &mut [Vec<C64>], dir: Direction) {
    let Some(n) = lines.first().map(Vec::len) else {
        return;
    };
    if n == 0 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let plan = match dir {
        Direction::Analysis => planner.plan_fft_forward(n),
        Direction::Synthesis => planner.plan_fft_inverse(n),
    };
    let scale = 1.0 / (n as f64).sqrt();
    lines.par_iter_mut().for_each(|line| {
        plan.process(line);
        for v in line.iter_mut() {
            *v *= scale;
        }
    });
}

fn rows_of(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn from_rows(rows: Vec<Vec<C64>>, ncols: usize) -> CMatrix {
    let nrows = rows.len();
    CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

fn cols_of(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.ncols())
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}

fn from_cols(cols: Vec<Vec<C64>>, nrows: usize) -> CMatrix {
    let ncols = cols.len();
    CMatrix::from_fn(nrows, ncols, |i, j| cols[j][i])
}

/// `D Ψ̄_F`: unitary DFT of every row of a real matrix.
pub fn rows_analysis(d: &RMatrix) -> CMatrix {
    rows_analysis_complex(&d.map(|x| C64::new(x, 0.0)))
}

/// `X Ψ̄_F` for a complex matrix.
pub fn rows_analysis_complex(x: &CMatrix) -> CMatrix {
    let mut rows = rows_of(x);
    transform_lines(&mut rows, Direction::Analysis);
    from_rows(rows, x.ncols())
}

/// `X Ψ_F`: unitary inverse DFT of every row.
pub fn rows_synthesis(x: &CMatrix) -> CMatrix {
    let mut rows = rows_of(x);
    transform_lines(&mut rows, Direction::Synthesis);
    from_rows(rows, x.ncols())
}

/// `Ψ̄_F X`: unitary DFT of every column.
pub fn cols_analysis(x: &CMatrix) -> CMatrix {
    let mut cols = cols_of(x);
    transform_lines(&mut cols, Direction::Analysis);
    from_cols(cols, x.nrows())
}

/// `Ψ_F X`: unitary inverse DFT of every column.
pub fn cols_synthesis(x: &CMatrix) -> CMatrix {
    let mut cols = cols_of(x);
    transform_lines(&mut cols, Direction::Synthesis);
    from_cols(cols, x.nrows())
}

/// `Ψ̄_F v` for a single vector.
pub fn analysis(v: &[C64]) -> Vec<C64> {
    let mut lines = vec![v.to_vec()];
    transform_lines(&mut lines, Direction::Analysis);
    lines.pop().unwrap_or_default()
}

/// `Ψ_F v` for a single vector.
pub fn synthesis(v: &[C64]) -> Vec<C64> {
    let mut lines = vec![v.to_vec()];
    transform_lines(&mut lines, Direction::Synthesis);
    lines.pop().unwrap_or_default()
}

/// Unnormalized library-convention DFT `Σ_k x[k] exp(-2πj·k·n/N)`.
pub fn dft_unnormalized(v: &[C64]) -> Vec<C64> {
    let scale = (v.len() as f64).sqrt();
    analysis(v).into_iter().map(|x| x * scale).collect()
}

/// Two-sided bin frequencies in FFT output order: bin 0 first, the upper
/// half labeled negative (the Nyquist bin of even lengths is negative).
pub fn bin_frequencies(n: usize, f_s: f64) -> Vec<f64> {
    let df = f_s / n as f64;
    (0..n)
        .map(|k| {
            if k <= (n - 1) / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}

/// Absolute frequency of bin `k` after folding the upper half onto the
/// lower one.
pub fn folded_frequency(k: usize, n: usize, f_s: f64) -> f64 {
    k.min(n - k) as f64 * f_s / n as f64
}
