//! Per-month metric bundles: ties the return, correlation, graph and
//! spectrum computations together for each calendar-month window.

use std::ops::Range;

use serde::Serialize;

use crate::corrnet::{
    adjacency, check_threshold, corr_stats, correlation_matrix, CorrStats, CorrelationMatrix,
    DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::ingest::{month_windows, IngestPolicy, MonthWindow, PricePanel};
use crate::metrics::{log_returns, window_stats, ReturnPanel, WindowStats};
use crate::month::MonthKey;
use crate::spectrum::{eigen_spectrum, SpectrumResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisOptions {
    /// Adjacency thresholds; the first one is the primary threshold.
    pub thresholds: Vec<f64>,
    /// Keep the benchmark column in the correlation matrix.
    pub include_benchmark: bool,
    pub benchmark: Option<String>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            thresholds: vec![DEFAULT_THRESHOLD],
            include_benchmark: true,
            benchmark: None,
        }
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.iter().try_for_each(|&t| check_threshold(t))
    }
}

/// Edge count at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Connectedness {
    pub threshold: f64,
    pub edge_count: usize,
    pub normalized: f64,
}

/// Everything computed for one calendar month.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMetrics {
    pub month: MonthKey,
    /// Row range in the return panel.
    pub window: Range<usize>,
    pub stats: WindowStats,
    pub correlation: CorrelationMatrix,
    pub corr_stats: CorrStats,
    pub spectrum: SpectrumResult,
    /// One entry per configured threshold, same order.
    pub connectedness: Vec<Connectedness>,
}

impl WindowMetrics {
    pub fn is_degenerate(&self) -> bool {
        self.correlation.is_degenerate()
    }

    pub fn lecm(&self) -> f64 {
        self.spectrum.lecm
    }

    /// Connectedness at the primary (first) threshold.
    pub fn primary_connectedness(&self) -> Option<&Connectedness> {
        self.connectedness.first()
    }

    /// Bundles an already computed correlation matrix with its derived
    /// statistics.
    pub fn from_correlation(
        stats: WindowStats,
        window: Range<usize>,
        correlation: CorrelationMatrix,
        thresholds: &[f64],
    ) -> Result<Self> {
        let corr_stats = corr_stats(&correlation)?;
        let spectrum = eigen_spectrum(&correlation)?;
        let connectedness = thresholds
            .iter()
            .map(|&t| {
                adjacency(&correlation, t).map(|g| Connectedness {
                    threshold: t,
                    edge_count: g.edge_count,
                    normalized: g.normalized_connectedness,
                })
            })
            .collect::<Result<_>>()?;
        Ok(WindowMetrics {
            month: stats.month,
            window,
            stats,
            correlation,
            corr_stats,
            spectrum,
            connectedness,
        })
    }
}

/// The return panel restricted to the entities that enter the correlation matrix.
pub fn correlation_universe(returns: &ReturnPanel, options: &AnalysisOptions) -> ReturnPanel {
    match (&options.benchmark, options.include_benchmark) {
        (Some(b), false) => returns.without(b),
        _ => returns.clone(),
    }
}

pub fn window_metrics(
    returns: &ReturnPanel,
    corr_universe: &ReturnPanel,
    window: Range<usize>,
    thresholds: &[f64],
) -> Result<WindowMetrics> {
    let stats = window_stats(returns, window.clone())?;
    let correlation = correlation_matrix(corr_universe, window.clone())?;
    WindowMetrics::from_correlation(stats, window, correlation, thresholds)
}

/// Metrics for every valid window, in window order. Invalid (short) months
/// are skipped.
pub fn analyze_returns(
    returns: &ReturnPanel,
    windows: &[MonthWindow],
    options: &AnalysisOptions,
) -> Result<Vec<WindowMetrics>> {
    options.validate()?;
    let universe = correlation_universe(returns, options);
    if universe.n_entities() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation analysis needs at least 2 entities, have {}",
            universe.n_entities()
        )));
    }
    windows
        .iter()
        .filter(|w| w.valid)
        .map(|w| window_metrics(returns, &universe, w.range.clone(), &options.thresholds))
        .collect()
}

/// Intermediate and final products of a full panel analysis.
#[derive(Debug, Clone)]
pub struct PanelAnalysis {
    pub returns: ReturnPanel,
    pub windows: Vec<MonthWindow>,
    pub metrics: Vec<WindowMetrics>,
}

impl PanelAnalysis {
    pub fn month(&self, month: MonthKey) -> Option<&WindowMetrics> {
        self.metrics.iter().find(|m| m.month == month)
    }

    /// Entities entering the correlation matrix.
    pub fn corr_entities(&self) -> &[String] {
        self.metrics
            .first()
            .map(|m| m.correlation.entities())
            .unwrap_or_default()
    }
}

/// Prices -> returns -> month windows -> per-month metrics.
pub fn analyze_panel(
    panel: &PricePanel,
    policy: &IngestPolicy,
    options: &AnalysisOptions,
) -> Result<PanelAnalysis> {
    policy.validate()?;
    let returns = log_returns(panel)?;
    let windows = month_windows(returns.dates(), policy);
    let metrics = analyze_returns(&returns, &windows, options)?;
    Ok(PanelAnalysis {
        returns,
        windows,
        metrics,
    })
}
