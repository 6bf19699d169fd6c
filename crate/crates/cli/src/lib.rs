//! The `plunge` command-line tool.
//!
//! Subcommands: `analyze` (price panel -> per-month metrics, labels and
//! series), `synth` (synthetic panel with ground truth) and `graph` (one
//! month's threshold graph on stdout). Configuration comes from an optional
//! TOML file, with flags taking precedence.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use app::run;
pub use config::RunConfig;
pub use error::{CliError, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
