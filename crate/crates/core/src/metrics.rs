//! Daily log returns and per-window mean / volatility.

use std::ops::Range;

use chrono::NaiveDate;
use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::PricePanel;
use crate::month::MonthKey;

/// Spread below which a window of returns is treated as constant.
pub const CONSTANT_TOLERANCE: f64 = 1e-15;

/// Daily log returns, each dated by the later of its two trading days.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    entities: Vec<String>,
    dates: Vec<NaiveDate>,
    values: Array2<f64>,
}

impl ReturnPanel {
    /// Builds a panel directly from return values (used by tests and the
    /// synthetic generator). Dates must be strictly increasing.
    pub fn new(entities: Vec<String>, dates: Vec<NaiveDate>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (dates.len(), entities.len()) {
            return Err(Error::InvalidConfig(format!(
                "return panel shape {:?} does not match {} dates x {} entities",
                values.dim(),
                dates.len(),
                entities.len()
            )));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "return dates must be strictly increasing".into(),
            ));
        }
        Ok(ReturnPanel {
            entities,
            dates,
            values,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn column(&self, entity: usize) -> ArrayView1<'_, f64> {
        self.values.column(entity)
    }

    /// Rows `window` of the return matrix.
    pub fn window(&self, window: Range<usize>) -> ArrayView2<'_, f64> {
        self.values.slice(s![window, ..])
    }

    pub fn entity_index(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == name)
    }

    /// Keeps only the listed entity columns, in the given order.
    pub fn select(&self, columns: &[usize]) -> ReturnPanel {
        ReturnPanel {
            entities: columns.iter().map(|&i| self.entities[i].clone()).collect(),
            dates: self.dates.clone(),
            values: self.values.select(Axis(1), columns),
        }
    }

    /// Drops one entity by name; returns a clone when it is absent.
    pub fn without(&self, name: &str) -> ReturnPanel {
        let keep: Vec<usize> = (0..self.n_entities())
            .filter(|&i| self.entities[i] != name)
            .collect();
        self.select(&keep)
    }
}

/// `R_i(t) = ln P_i(t) - ln P_i(t-1)` for every entity.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if panel.n_dates() < 2 {
        return Err(Error::InsufficientData(format!(
            "log returns need at least 2 prices, panel has {}",
            panel.n_dates()
        )));
    }
    let logs = panel.values().mapv(f64::ln);
    let values = &logs.slice(s![1.., ..]) - &logs.slice(s![..-1, ..]);
    Ok(ReturnPanel {
        entities: panel.entities().to_vec(),
        dates: panel.dates()[1..].to_vec(),
        values,
    })
}

/// Mean and volatility of each entity over one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowStats {
    pub month: MonthKey,
    pub mean_return: Vec<f64>,
    /// Population standard deviation (`1/T_s` normalisation).
    pub volatility: Vec<f64>,
    pub n_days: usize,
}

pub fn window_stats(returns: &ReturnPanel, window: Range<usize>) -> Result<WindowStats> {
    check_window(returns, &window, 1)?;
    let month = MonthKey::of(returns.dates[window.start]);
    let rows = returns.window(window.clone());
    let (mean_return, volatility) = rows
        .columns()
        .into_iter()
        .map(|col| mean_and_volatility(&col.to_vec()))
        .unzip();
    Ok(WindowStats {
        month,
        mean_return,
        volatility,
        n_days: window.len(),
    })
}

pub(crate) fn check_window(
    returns: &ReturnPanel,
    window: &Range<usize>,
    min_len: usize,
) -> Result<()> {
    if window.end > returns.n_dates() || window.start > window.end {
        return Err(Error::InvalidConfig(format!(
            "window {}..{} outside panel of {} rows",
            window.start,
            window.end,
            returns.n_dates()
        )));
    }
    if window.len() < min_len {
        return Err(Error::InsufficientData(format!(
            "window of {} observations, need at least {min_len}",
            window.len()
        )));
    }
    Ok(())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// True when all values lie within [`CONSTANT_TOLERANCE`] of each other.
pub fn is_constant(xs: &[f64]) -> bool {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo <= CONSTANT_TOLERANCE
}

/// Two-pass mean and population standard deviation. Exactly zero volatility
/// for constant input.
pub fn mean_and_volatility(xs: &[f64]) -> (f64, f64) {
    let mu = mean(xs);
    if is_constant(xs) {
        return (mu, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
    (mu, (ss / xs.len() as f64).sqrt())
}
