use std::path::PathBuf;

use plunge_core::analysis::{analyze_panel, AnalysisOptions, PanelAnalysis};
use plunge_core::corrnet::{adjacency, check_threshold, export_graph, GraphFormat};
use plunge_core::indicator::{emit_report, label_series, parameter_space, Report, ReportFormat};
use plunge_core::spectrum::spectrum_series;
use plunge_core::{generate, load_pe_series, load_price_panel, MonthKey, PeSeries};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{csv_document, num, Artifacts};

/// Everything `analyze` computes before rendering.
#[derive(Debug, Clone)]
pub struct AnalysisRun {
    pub analysis: PanelAnalysis,
    pub report: Report,
    pub warnings: Vec<String>,
}

fn analysis_options(cfg: &RunConfig) -> Result<AnalysisOptions> {
    if cfg.thresholds.is_empty() {
        return Err(CliError::Usage("at least one threshold is required".into()));
    }
    for &t in &cfg.thresholds {
        check_threshold(t)?;
    }
    let benchmark = cfg.ingest.benchmark_name.clone();
    if !cfg.benchmark_corr && benchmark.is_none() {
        return Err(CliError::Usage(
            "--no-benchmark-corr needs a benchmark column (--benchmark or ingest.benchmark_name)"
                .into(),
        ));
    }
    Ok(AnalysisOptions {
        thresholds: cfg.thresholds.clone(),
        include_benchmark: cfg.benchmark_corr,
        benchmark,
    })
}

/// Prices -> per-month metrics, without the PE join.
pub fn analyze_prices(cfg: &RunConfig) -> Result<PanelAnalysis> {
    let options = analysis_options(cfg)?;
    cfg.ingest.validate()?;
    let prices = cfg
        .prices
        .as_ref()
        .ok_or_else(|| CliError::Usage("a price file is required (--prices)".into()))?;
    let panel = load_price_panel(prices, &cfg.ingest)?;
    Ok(analyze_panel(&panel, &cfg.ingest, &options)?)
}

pub fn run_analysis(cfg: &RunConfig) -> Result<AnalysisRun> {
    cfg.indicator.validate(None)?;
    let analysis = analyze_prices(cfg)?;
    let n = analysis.corr_entities().len();
    cfg.indicator.validate((n > 0).then_some(n))?;
    let mut warnings = Vec::new();
    let pe = match &cfg.pe {
        Some(path) => load_pe_series(path)?,
        None => {
            warnings
                .push("no PE series given; months can only be labelled Normal or Crisis".into());
            PeSeries::new(Vec::new())?
        }
    };
    if analysis.metrics.is_empty() {
        warnings.push(format!(
            "no month has at least {} trading days; nothing to label",
            cfg.ingest.min_days_per_month
        ));
    }
    let report = label_series(&analysis.metrics, &pe, &cfg.indicator);
    Ok(AnalysisRun {
        analysis,
        report,
        warnings,
    })
}

/// Renders every `analyze` artifact.
pub fn analysis_artifacts(run: &AnalysisRun, cfg: &RunConfig) -> Artifacts {
    let metrics = &run.analysis.metrics;
    let mut arts = Artifacts::new();

    arts.add(
        "metrics.csv",
        csv_document(
            &[
                "month",
                "n_days",
                "n_entities",
                "corr_mean",
                "corr_stdev",
                "corr_ratio",
                "corr_min",
                "corr_max",
                "lecm",
                "lambda2",
                "lambda3",
                "degenerate",
            ],
            metrics.iter().map(|m| {
                let s = &m.corr_stats;
                vec![
                    m.month.to_string(),
                    m.stats.n_days.to_string(),
                    m.correlation.n().to_string(),
                    num(Some(s.mean)),
                    num(Some(s.stdev)),
                    num(s.ratio),
                    num(Some(s.min)),
                    num(Some(s.max)),
                    num(Some(m.spectrum.lecm)),
                    num(m.spectrum.second),
                    num(m.spectrum.third),
                    m.is_degenerate().to_string(),
                ]
            }),
        ),
    );

    let entities = run.analysis.returns.entities();
    arts.add(
        "volatility.csv",
        csv_document(
            &["month", "entity", "mean_return", "volatility"],
            metrics.iter().flat_map(|m| {
                entities.iter().enumerate().map(move |(i, e)| {
                    vec![
                        m.month.to_string(),
                        e.clone(),
                        num(Some(m.stats.mean_return[i])),
                        num(Some(m.stats.volatility[i])),
                    ]
                })
            }),
        ),
    );

    arts.add(
        "connectedness.csv",
        csv_document(
            &["month", "threshold", "edge_count", "normalized"],
            metrics.iter().flat_map(|m| {
                m.connectedness.iter().map(move |c| {
                    vec![
                        m.month.to_string(),
                        num(Some(c.threshold)),
                        c.edge_count.to_string(),
                        num(Some(c.normalized)),
                    ]
                })
            }),
        ),
    );

    arts.add(
        "eigenvalues.csv",
        csv_document(
            &["month", "rank", "eigenvalue"],
            metrics.iter().flat_map(|m| {
                m.spectrum
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(move |(k, v)| {
                        vec![m.month.to_string(), (k + 1).to_string(), num(Some(*v))]
                    })
            }),
        ),
    );

    arts.add(
        "spectrum.csv",
        csv_document(
            &["month", "lecm", "lambda2", "lambda3", "flagged"],
            spectrum_series(metrics).into_iter().map(|r| {
                vec![
                    r.month.to_string(),
                    num(Some(r.lecm)),
                    num(r.second),
                    num(r.third),
                    r.flagged.to_string(),
                ]
            }),
        ),
    );

    arts.add(
        "parameter_space.csv",
        csv_document(
            &["month", "lecm", "pe", "label"],
            parameter_space(&run.report).into_iter().map(|p| {
                vec![
                    p.month.to_string(),
                    num(Some(p.lecm)),
                    num(Some(p.pe)),
                    p.label.to_string(),
                ]
            }),
        ),
    );

    match cfg.format {
        OutputFormat::Json => arts.add("report.json", emit_report(&run.report, ReportFormat::Json)),
        OutputFormat::Csv => arts.add("report.csv", emit_report(&run.report, ReportFormat::Csv)),
    }

    if cfg.graphs {
        for m in metrics {
            for &t in &cfg.thresholds {
                let g = adjacency(&m.correlation, t).expect("threshold validated");
                arts.add(
                    format!("graphs/{}_t{t}.dot", m.month),
                    export_graph(&g, GraphFormat::Dot),
                );
            }
        }
    }
    arts
}

/// Full `analyze`: compute, render, write. Returns the written paths and
/// any warnings.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<(Vec<PathBuf>, Vec<String>)> {
    let run = run_analysis(cfg)?;
    let arts = analysis_artifacts(&run, cfg);
    let written = arts.commit(&cfg.out_dir())?;
    Ok((written, run.warnings))
}

pub fn synth_artifacts(cfg: &RunConfig) -> Result<Artifacts> {
    let out = generate(&cfg.synth)?;
    let mut arts = Artifacts::new();
    arts.add("prices.csv", out.prices.to_csv_string());
    let mut pe = Vec::new();
    out.pe.write_csv(&mut pe)?;
    arts.add("pe.csv", pe);
    arts.add("regimes.json", out.truth.to_json());
    Ok(arts)
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    synth_artifacts(cfg)?.commit(&cfg.out_dir())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum GraphOutput {
    #[default]
    Dot,
    Json,
}

/// Adjacency graph of one analyzed month at the primary threshold.
pub fn cmd_graph(cfg: &RunConfig, month: MonthKey, format: GraphOutput) -> Result<String> {
    let threshold = *cfg
        .thresholds
        .first()
        .ok_or_else(|| CliError::Usage("a threshold is required".into()))?;
    check_threshold(threshold)?;
    let analysis = analyze_prices(cfg)?;
    let m = analysis.month(month).ok_or_else(|| {
        CliError::Input(format!(
            "month {month} is not in the analyzed panel (absent, or fewer than {} trading days)",
            cfg.ingest.min_days_per_month
        ))
    })?;
    let g = adjacency(&m.correlation, threshold)?;
    Ok(export_graph(
        &g,
        match format {
            GraphOutput::Dot => GraphFormat::Dot,
            GraphOutput::Json => GraphFormat::EdgeListJson,
        },
    ))
}
