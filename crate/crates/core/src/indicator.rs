//! Two-parameter crash classifier over the monthly LECM and PE series.
//!
//! A month is a **Crash** month when the largest eigenvalue of its correlation
//! matrix reaches `lecm_min` *and* the benchmark PE ratio reaches `pe_min`.
//! High LECM alone (PE low or unknown) is a **Crisis**. Everything else is
//! **Normal**. The correlation-statistics thresholds only raise informational
//! flags and never change the label.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::WindowMetrics;
use crate::error::{Error, Result};
use crate::ingest::{format_significant, PeSeries};
use crate::month::MonthKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub pe_min: f64,
    pub lecm_min: f64,
    pub mean_corr_min: Option<f64>,
    pub min_corr_min: Option<f64>,
    pub stdev_max: Option<f64>,
    pub persistence_months: usize,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            pe_min: 20.0,
            lecm_min: 11.0,
            mean_corr_min: Some(0.80),
            min_corr_min: Some(0.65),
            stdev_max: Some(0.12),
            persistence_months: 1,
        }
    }
}

impl IndicatorConfig {
    /// Checks `pe_min > 0`, `lecm_min >= 1`, and `lecm_min <= n_entities`
    /// when the matrix size is known.
    pub fn validate(&self, n_entities: Option<usize>) -> Result<()> {
        if !(self.pe_min > 0.0 && self.pe_min.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pe_min must be positive, got {}",
                self.pe_min
            )));
        }
        if !(self.lecm_min >= 1.0 && self.lecm_min.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lecm_min must be at least 1, got {}",
                self.lecm_min
            )));
        }
        if let Some(n) = n_entities {
            if self.lecm_min > n as f64 {
                return Err(Error::InvalidConfig(format!(
                    "lecm_min {} exceeds the matrix size {n}",
                    self.lecm_min
                )));
            }
        }
        if self.persistence_months == 0 {
            return Err(Error::InvalidConfig(
                "persistence_months must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Crisis,
    Crash,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "Normal",
            Label::Crisis => "Crisis",
            Label::Crash => "Crash",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxFlag {
    HighMean,
    LowStdev,
    HighMinCorr,
}

impl AuxFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            AuxFlag::HighMean => "high_mean",
            AuxFlag::LowStdev => "low_stdev",
            AuxFlag::HighMinCorr => "high_min_corr",
        }
    }
}

pub fn classify_month(lecm: f64, pe: Option<f64>, config: &IndicatorConfig) -> Label {
    if lecm < config.lecm_min {
        return Label::Normal;
    }
    match pe {
        Some(pe) if pe >= config.pe_min => Label::Crash,
        _ => Label::Crisis,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthLabel {
    pub month: MonthKey,
    pub label: Label,
    pub lecm: f64,
    pub pe: Option<f64>,
    pub auxiliary_flags: BTreeSet<AuxFlag>,
}

/// A labelled month together with the metrics it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthRecord {
    pub label: MonthLabel,
    pub metrics: WindowMetrics,
}

/// Maximal run of calendar-consecutive months sharing a non-Normal label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start: MonthKey,
    pub end: MonthKey,
    pub label: Label,
}

impl Interval {
    pub fn contains(&self, month: MonthKey) -> bool {
        self.start <= month && month <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub per_month: Vec<MonthRecord>,
    pub intervals: Vec<Interval>,
    pub config: IndicatorConfig,
}

impl Report {
    pub fn labels(&self) -> impl Iterator<Item = &MonthLabel> {
        self.per_month.iter().map(|r| &r.label)
    }

    /// Months covered by intervals carrying `label`.
    pub fn months_in_intervals(&self, label: Label) -> BTreeSet<MonthKey> {
        let mut out = BTreeSet::new();
        for iv in self.intervals.iter().filter(|iv| iv.label == label) {
            let mut m = iv.start;
            while m <= iv.end {
                out.insert(m);
                m = m.succ();
            }
        }
        out
    }
}

fn auxiliary_flags(m: &WindowMetrics, config: &IndicatorConfig) -> BTreeSet<AuxFlag> {
    let s = &m.corr_stats;
    let mut flags = BTreeSet::new();
    if config.mean_corr_min.is_some_and(|v| s.mean > v) {
        flags.insert(AuxFlag::HighMean);
    }
    if config.stdev_max.is_some_and(|v| s.stdev < v) {
        flags.insert(AuxFlag::LowStdev);
    }
    if config.min_corr_min.is_some_and(|v| s.min > v) {
        flags.insert(AuxFlag::HighMinCorr);
    }
    flags
}

/// Labels every month and extracts the crisis / crash intervals.
pub fn label_series(metrics: &[WindowMetrics], pe: &PeSeries, config: &IndicatorConfig) -> Report {
    let mut sorted: Vec<&WindowMetrics> = metrics.iter().collect();
    sorted.sort_by_key(|m| m.month);
    let per_month: Vec<MonthRecord> = sorted
        .into_iter()
        .map(|m| {
            let pe = pe.get(m.month);
            MonthRecord {
                label: MonthLabel {
                    month: m.month,
                    label: classify_month(m.lecm(), pe, config),
                    lecm: m.lecm(),
                    pe,
                    auxiliary_flags: auxiliary_flags(m, config),
                },
                metrics: m.clone(),
            }
        })
        .collect();
    let labels: Vec<(MonthKey, Label)> = per_month
        .iter()
        .map(|r| (r.label.month, r.label.label))
        .collect();
    Report {
        intervals: extract_intervals(&labels, config.persistence_months),
        per_month,
        config: config.clone(),
    }
}

/// Maximal runs of equal non-Normal labels over consecutive calendar months,
/// kept when at least `persistence` months long. A skipped month breaks a run.
pub fn extract_intervals(labels: &[(MonthKey, Label)], persistence: usize) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let (start, label) = labels[i];
        let mut j = i + 1;
        while j < labels.len() && labels[j].1 == label && labels[j].0 == labels[j - 1].0.succ() {
            j += 1;
        }
        if label != Label::Normal && j - i >= persistence.max(1) {
            out.push(Interval {
                start,
                end: labels[j - 1].0,
                label,
            });
        }
        i = j;
    }
    out
}

/// One point of the LECM / PE parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterPoint {
    pub month: MonthKey,
    pub lecm: f64,
    pub pe: f64,
    pub label: Label,
}

/// Months with a PE observation, as `(lecm, pe, label)` points.
pub fn parameter_space(report: &Report) -> Vec<ParameterPoint> {
    report
        .labels()
        .filter_map(|l| {
            l.pe.map(|pe| ParameterPoint {
                month: l.month,
                lecm: l.lecm,
                pe,
                label: l.label,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const REPORT_CSV_HEADER: [&str; 10] = [
    "month",
    "label",
    "lecm",
    "pe",
    "connectedness",
    "corr_mean",
    "corr_stdev",
    "corr_min",
    "eigenvalues",
    "flags",
];

#[derive(Serialize)]
struct JsonMonth<'a> {
    month: MonthKey,
    label: Label,
    lecm: f64,
    pe: Option<f64>,
    connectedness: Option<f64>,
    corr_mean: f64,
    corr_stdev: f64,
    corr_min: f64,
    eigenvalues: &'a [f64],
    flags: Vec<&'static str>,
    n_days: usize,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a IndicatorConfig,
    connectedness_threshold: Option<f64>,
    months: Vec<JsonMonth<'a>>,
    intervals: &'a [Interval],
}

fn flags_of(r: &MonthRecord) -> Vec<&'static str> {
    let mut flags: Vec<&'static str> = r.label.auxiliary_flags.iter().map(|f| f.as_str()).collect();
    if r.metrics.is_degenerate() {
        flags.push("degenerate");
    }
    flags
}

fn json_month(r: &MonthRecord) -> JsonMonth<'_> {
    let m = &r.metrics;
    JsonMonth {
        month: r.label.month,
        label: r.label.label,
        lecm: r.label.lecm,
        pe: r.label.pe,
        connectedness: m.primary_connectedness().map(|c| c.normalized),
        corr_mean: m.corr_stats.mean,
        corr_stdev: m.corr_stats.stdev,
        corr_min: m.corr_stats.min,
        eigenvalues: &m.spectrum.eigenvalues,
        flags: flags_of(r),
        n_days: m.stats.n_days,
    }
}

/// Serializes the report. Output depends only on the report contents.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let doc = JsonReport {
                config: &report.config,
                connectedness_threshold: report
                    .per_month
                    .first()
                    .and_then(|r| r.metrics.primary_connectedness())
                    .map(|c| c.threshold),
                months: report.per_month.iter().map(json_month).collect(),
                intervals: &report.intervals,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(REPORT_CSV_HEADER).expect("in-memory write");
            for r in &report.per_month {
                let m = &r.metrics;
                let eig: Vec<String> = m.spectrum.eigenvalues.iter().map(f64::to_string).collect();
                w.write_record([
                    r.label.month.to_string(),
                    r.label.label.to_string(),
                    r.label.lecm.to_string(),
                    r.label
                        .pe
                        .map(|p| format_significant(p, 12))
                        .unwrap_or_default(),
                    m.primary_connectedness()
                        .map(|c| c.normalized.to_string())
                        .unwrap_or_default(),
                    m.corr_stats.mean.to_string(),
                    m.corr_stats.stdev.to_string(),
                    m.corr_stats.min.to_string(),
                    eig.join(";"),
                    flags_of(r).join(";"),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IndicatorConfig {
        IndicatorConfig::default()
    }

    fn mk(s: &str) -> MonthKey {
        s.parse().unwrap()
    }

    #[test]
    fn classify_table_rows() {
        assert_eq!(classify_month(11.05, Some(20.41), &cfg()), Label::Crash);
        assert_eq!(classify_month(11.32, Some(25.53), &cfg()), Label::Crash);
        assert_eq!(classify_month(11.2, Some(17.9), &cfg()), Label::Crisis);
        assert_eq!(classify_month(8.17, Some(26.94), &cfg()), Label::Normal);
        assert_eq!(classify_month(0.0, None, &cfg()), Label::Normal);
        assert_eq!(classify_month(12.0, None, &cfg()), Label::Crisis);
    }

    #[test]
    fn thresholds_are_inclusive() {
        assert_eq!(classify_month(11.0, Some(20.0), &cfg()), Label::Crash);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate(Some(13)).is_ok());
        assert!(cfg().validate(Some(10)).is_err());
        let bad = IndicatorConfig {
            pe_min: 0.0,
            ..cfg()
        };
        assert!(bad.validate(None).is_err());
        let bad = IndicatorConfig {
            lecm_min: 0.5,
            ..cfg()
        };
        assert!(bad.validate(None).is_err());
        let bad = IndicatorConfig {
            persistence_months: 0,
            ..cfg()
        };
        assert!(bad.validate(None).is_err());
    }

    #[test]
    fn intervals_are_maximal_runs() {
        use Label::*;
        let months = [
            "2006-01", "2006-02", "2006-03", "2006-04", "2006-05", "2006-06", "2006-07",
        ];
        let labels = [Normal, Crash, Crash, Crisis, Normal, Crisis, Crisis];
        let seq: Vec<_> = months.iter().map(|m| mk(m)).zip(labels).collect();
        let iv = extract_intervals(&seq, 1);
        assert_eq!(
            iv,
            vec![
                Interval {
                    start: mk("2006-02"),
                    end: mk("2006-03"),
                    label: Crash
                },
                Interval {
                    start: mk("2006-04"),
                    end: mk("2006-04"),
                    label: Crisis
                },
                Interval {
                    start: mk("2006-06"),
                    end: mk("2006-07"),
                    label: Crisis
                },
            ]
        );
        let iv = extract_intervals(&seq, 2);
        assert_eq!(iv.len(), 2);
        assert!(iv.iter().all(|i| i.start != mk("2006-04")));
    }

    #[test]
    fn calendar_gap_breaks_run() {
        let seq = vec![(mk("2006-01"), Label::Crash), (mk("2006-03"), Label::Crash)];
        assert_eq!(extract_intervals(&seq, 1).len(), 2);
        assert!(extract_intervals(&seq, 2).is_empty());
        assert!(extract_intervals(&[], 1).is_empty());
    }
}
