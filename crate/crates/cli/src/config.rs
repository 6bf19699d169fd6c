//! Run configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use plunge_core::corrnet::DEFAULT_THRESHOLD;
use plunge_core::{IndicatorConfig, IngestPolicy, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PLUNGE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "plunge-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Wide daily price CSV (`date,<entity>,...`).
    pub prices: Option<PathBuf>,
    /// Monthly PE CSV (`month,pe`). Optional: without it no month is a Crash.
    pub pe: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Adjacency thresholds; the first is the primary one.
    pub thresholds: Vec<f64>,
    /// Keep the benchmark column (`ingest.benchmark_name`) in the correlation matrix.
    pub benchmark_corr: bool,
    /// Write one DOT graph per month and threshold.
    pub graphs: bool,
    pub ingest: IngestPolicy,
    pub indicator: IndicatorConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prices: None,
            pe: None,
            out: None,
            format: OutputFormat::Json,
            thresholds: vec![DEFAULT_THRESHOLD],
            benchmark_corr: true,
            graphs: false,
            ingest: IngestPolicy::default(),
            indicator: IndicatorConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads a config file; relative input paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let err = |message: String| CliError::ConfigFile {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| err(e.message().to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.prices, &mut cfg.pe, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// `out`, else `$PLUNGE_OUT_DIR`, else `plunge-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}
