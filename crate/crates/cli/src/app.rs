//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use plunge_core::{MissingCellAction, MonthKey};

use crate::commands::{cmd_analyze, cmd_graph, cmd_synth, GraphOutput};
use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "plunge",
    version,
    about = "Monthly correlation-network and eigenvalue crash indicators for sector index panels",
    after_help = "Exit codes: 0 success, 1 usage or configuration error, 2 input error, 3 internal numerical error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-month metrics, labels, intervals and series for a price panel.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic two-regime panel with ground truth.
    Synth(SynthArgs),
    /// Print one month's threshold graph.
    Graph(GraphArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// TOML config file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Wide daily price CSV: `date,<entity>,...`.
    #[arg(long, value_name = "FILE")]
    pub prices: Option<PathBuf>,
    /// Adjacency threshold in [0, 1]; repeat for several (first is primary).
    #[arg(long = "threshold", value_name = "T")]
    pub thresholds: Vec<f64>,
    /// Name of the benchmark index column.
    #[arg(long, value_name = "NAME")]
    pub benchmark: Option<String>,
    /// Leave the benchmark column out of the correlation matrix.
    #[arg(long)]
    pub no_benchmark_corr: bool,
    /// Minimum trading days for a month to be analyzed.
    #[arg(long, value_name = "N")]
    pub min_days: Option<usize>,
    /// What to do with a date that has missing or non-positive prices.
    #[arg(long, value_enum, value_name = "ACTION")]
    pub missing: Option<MissingArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MissingArg {
    DropDate,
    Fail,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Monthly PE CSV: `month,pe` with months as YYYY-MM.
    #[arg(long, value_name = "FILE")]
    pub pe: Option<PathBuf>,
    #[arg(long, value_name = "X")]
    pub pe_min: Option<f64>,
    #[arg(long, value_name = "X")]
    pub lecm_min: Option<f64>,
    /// Minimum run length (months) for an interval.
    #[arg(long, value_name = "N")]
    pub persistence: Option<usize>,
    /// Output directory [default: $PLUNGE_OUT_DIR, else plunge-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Also write DOT graphs for every month and threshold.
    #[arg(long)]
    pub graphs: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// TOML config file; the `[synth]` table is used.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $PLUNGE_OUT_DIR, else plunge-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub entities: Option<usize>,
    #[arg(long, value_name = "N")]
    pub days_per_month: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Month to draw, YYYY-MM.
    #[arg(long, value_name = "YYYY-MM")]
    pub month: MonthKey,
    #[arg(long, value_enum, default_value_t = GraphOutput::Dot)]
    pub format: GraphOutput,
}

fn base_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
}

impl InputArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.prices {
            cfg.prices = Some(p.clone());
        }
        if !self.thresholds.is_empty() {
            cfg.thresholds = self.thresholds.clone();
        }
        if let Some(b) = &self.benchmark {
            cfg.ingest.benchmark_name = Some(b.clone());
        }
        if self.no_benchmark_corr {
            cfg.benchmark_corr = false;
        }
        if let Some(n) = self.min_days {
            cfg.ingest.min_days_per_month = n;
        }
        if let Some(m) = self.missing {
            cfg.ingest.missing_cell_action = match m {
                MissingArg::DropDate => MissingCellAction::DropDate,
                MissingArg::Fail => MissingCellAction::Fail,
            };
        }
    }
}

impl AnalyzeArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let mut cfg = base_config(self.input.config.as_ref())?;
        self.input.apply(&mut cfg);
        if let Some(p) = &self.pe {
            cfg.pe = Some(p.clone());
        }
        if let Some(v) = self.pe_min {
            cfg.indicator.pe_min = v;
        }
        if let Some(v) = self.lecm_min {
            cfg.indicator.lecm_min = v;
        }
        if let Some(v) = self.persistence {
            cfg.indicator.persistence_months = v;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if self.graphs {
            cfg.graphs = true;
        }
        Ok(cfg)
    }
}

impl SynthArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let mut cfg = base_config(self.config.as_ref())?;
        if let Some(s) = self.seed {
            cfg.synth.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(n) = self.entities {
            cfg.synth.n_entities = n;
        }
        if let Some(d) = self.days_per_month {
            cfg.synth.days_per_month = d;
        }
        Ok(cfg)
    }
}

impl GraphArgs {
    pub fn config(&self) -> Result<RunConfig> {
        let mut cfg = base_config(self.input.config.as_ref())?;
        self.input.apply(&mut cfg);
        Ok(cfg)
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let out_err = CliError::io("writing to stdout");
    match command {
        Command::Analyze(args) => {
            let cfg = args.config()?;
            let (written, warnings) = cmd_analyze(&cfg)?;
            for w in warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            writeln!(
                stdout,
                "wrote {} files to {}",
                written.len(),
                cfg.out_dir().display()
            )
            .map_err(out_err)?;
        }
        Command::Synth(args) => {
            let cfg = args.config()?;
            let written = cmd_synth(&cfg)?;
            writeln!(
                stdout,
                "wrote {} files to {}",
                written.len(),
                cfg.out_dir().display()
            )
            .map_err(out_err)?;
        }
        Command::Graph(args) => {
            let cfg = args.config()?;
            let doc = cmd_graph(&cfg, args.month, args.format)?;
            stdout.write_all(doc.as_bytes()).map_err(out_err)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to `stderr` as one line.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
