//! Eigenvalue spectra of correlation matrices.
//!
//! The solver is the cyclic Jacobi method: sweep over every `(p, q)` pair in
//! row order and apply the plane rotation that zeroes `a_pq`. Each rotation
//! is an orthogonal similarity transform, so the eigenvalues are preserved
//! while the off-diagonal mass shrinks (quadratically, once small). For the
//! matrix sizes involved here (N around 20 or less) a handful of sweeps
//! suffices and the method is unconditionally stable.

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::analysis::WindowMetrics;
use crate::corrnet::{CorrelationMatrix, SYMMETRY_TOLERANCE};
use crate::error::{Error, Result};
use crate::month::MonthKey;

/// Iteration stops once the off-diagonal Frobenius norm falls below this.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Largest eigenvalue of the correlation matrix.
    pub lecm: f64,
    pub second: Option<f64>,
    pub third: Option<f64>,
    /// Jacobi sweeps performed.
    pub iterations: usize,
}

impl SpectrumResult {
    fn from_sorted(eigenvalues: Vec<f64>, iterations: usize) -> Self {
        SpectrumResult {
            lecm: eigenvalues[0],
            second: eigenvalues.get(1).copied(),
            third: eigenvalues.get(2).copied(),
            eigenvalues,
            iterations,
        }
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

pub fn eigen_spectrum(c: &CorrelationMatrix) -> Result<SpectrumResult> {
    symmetric_spectrum(c.values().view())
}

/// Spectrum of an arbitrary symmetric matrix.
pub fn symmetric_spectrum(a: ArrayView2<'_, f64>) -> Result<SpectrumResult> {
    let (mut eigenvalues, sweeps) = jacobi_eigenvalues(a)?;
    eigenvalues.sort_by(|x, y| y.total_cmp(x));
    Ok(SpectrumResult::from_sorted(eigenvalues, sweeps))
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[[i, j]] * a[[i, j]];
        }
    }
    (2.0 * s).sqrt()
}

/// Unsorted eigenvalues and the number of sweeps used.
fn jacobi_eigenvalues(input: ArrayView2<'_, f64>) -> Result<(Vec<f64>, usize)> {
    let (rows, cols) = input.dim();
    if rows != cols {
        return Err(Error::Numerical(format!(
            "eigenvalues of a non-square {rows}x{cols} matrix"
        )));
    }
    let n = rows;
    if n == 0 {
        return Err(Error::InsufficientData(
            "empty matrix has no spectrum".into(),
        ));
    }
    for i in 0..n {
        for j in 0..i {
            if !input[[i, j]].is_finite()
                || (input[[i, j]] - input[[j, i]]).abs() > SYMMETRY_TOLERANCE
            {
                return Err(Error::Numerical(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let mut a = input.to_owned();
    for sweep in 0..=MAX_SWEEPS {
        if off_diagonal_norm(&a) < OFF_DIAGONAL_TOLERANCE {
            return Ok(((0..n).map(|i| a[[i, i]]).collect(), sweep));
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, p, q);
            }
        }
    }
    Err(Error::Numerical(format!(
        "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
        off_diagonal_norm(&a)
    )))
}

/// Applies the rotation in the `(p, q)` plane that annihilates `a[p][q]`.
fn rotate(a: &mut Array2<f64>, p: usize, q: usize) {
    let apq = a[[p, q]];
    if apq == 0.0 {
        return;
    }
    let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
    // smaller root of t^2 + 2 theta t - 1 = 0, |angle| <= pi/4
    let t = if theta >= 0.0 {
        1.0 / (theta + theta.hypot(1.0))
    } else {
        -1.0 / (-theta + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let n = a.nrows();
    for k in 0..n {
        let (akp, akq) = (a[[k, p]], a[[k, q]]);
        a[[k, p]] = c * akp - s * akq;
        a[[k, q]] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[[p, k]], a[[q, k]]);
        a[[p, k]] = c * apk - s * aqk;
        a[[q, k]] = s * apk + c * aqk;
    }
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;
}

/// One month of the largest-eigenvalue series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub month: MonthKey,
    pub lecm: f64,
    pub second: Option<f64>,
    pub third: Option<f64>,
    /// The month's matrix has degenerate (zero-variance) entities.
    pub flagged: bool,
}

/// Top three eigenvalues per month, chronologically.
pub fn spectrum_series(metrics: &[WindowMetrics]) -> Vec<SpectrumRow> {
    let mut rows: Vec<SpectrumRow> = metrics
        .iter()
        .map(|m| SpectrumRow {
            month: m.month,
            lecm: m.spectrum.lecm,
            second: m.spectrum.second,
            third: m.spectrum.third,
            flagged: m.is_degenerate(),
        })
        .collect();
    rows.sort_by_key(|r| r.month);
    rows
}
