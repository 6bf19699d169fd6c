#![allow(dead_code)]

use chrono::NaiveDate;
use ndarray::Array2;
use plunge_core::{CorrelationMatrix, ReturnPanel};
use plunge_oracles::Matrix;

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i:02}")).collect()
}

pub fn daily_dates(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2006, 1, 2).unwrap();
    (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
}

/// Column-wise returns -> panel with consecutive daily dates.
pub fn panel_from_columns(columns: &[Vec<f64>]) -> ReturnPanel {
    let t = columns[0].len();
    let n = columns.len();
    let values = Array2::from_shape_fn((t, n), |(r, c)| columns[c][r]);
    ReturnPanel::new(names(n), daily_dates(t), values).unwrap()
}

pub fn to_matrix(m: &Array2<f64>) -> Matrix {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn from_matrix(m: &Matrix) -> CorrelationMatrix {
    let n = m.len();
    let values = Array2::from_shape_fn((n, n), |(i, j)| m[i][j]);
    CorrelationMatrix::new(names(n), values).unwrap()
}
