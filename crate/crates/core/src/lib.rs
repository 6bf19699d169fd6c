//! Market-plunge indicators from sector index panels.
//!
//! The pipeline runs month by month:
//!
//! 1. [`ingest`]: load a wide daily price CSV and a monthly PE CSV, split the
//!    trading calendar into calendar months;
//! 2. [`metrics`]: daily log returns, per-month mean return and volatility;
//! 3. [`corrnet`]: the monthly correlation matrix, its off-diagonal
//!    statistics, and threshold adjacency graphs;
//! 4. [`spectrum`]: eigenvalues of the correlation matrix, in particular the
//!    largest one (LECM);
//! 5. [`indicator`]: label each month Normal / Crisis / Crash from LECM and
//!    PE and extract the labelled intervals.
//!
//! [`synth`] generates one-factor regime-switching panels with known ground
//! truth for end-to-end checks.

pub mod analysis;
pub mod corrnet;
pub mod error;
pub mod indicator;
pub mod ingest;
pub mod metrics;
pub mod month;
pub mod spectrum;
pub mod synth;

pub use analysis::{
    analyze_panel, analyze_returns, AnalysisOptions, Connectedness, PanelAnalysis, WindowMetrics,
};
pub use corrnet::{
    adjacency, corr_stats, correlation_matrix, export_graph, AdjacencyGraph, CorrStats,
    CorrelationMatrix, GraphFormat,
};
pub use error::{Error, ErrorKind, Result};
pub use indicator::{
    classify_month, emit_report, label_series, parameter_space, IndicatorConfig, Label, Report,
    ReportFormat,
};
pub use ingest::{
    load_pe_series, load_price_panel, month_windows, IngestPolicy, MissingCellAction, MonthWindow,
    PeSeries, PricePanel,
};
pub use metrics::{log_returns, window_stats, ReturnPanel, WindowStats};
pub use month::MonthKey;
pub use spectrum::{eigen_spectrum, spectrum_series, SpectrumResult};
pub use synth::{expected_pairwise_correlation, generate, Regime, SynthConfig};
