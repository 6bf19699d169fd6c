use std::io;
use std::path::PathBuf;

use plunge_core::ErrorKind;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
/// Bad flags, bad configuration values.
pub const EXIT_USAGE: u8 = 1;
/// Unreadable or malformed input data, failed writes.
pub const EXIT_INPUT: u8 = 2;
/// Internal numerical failure (non-convergence, correlation overshoot).
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] plunge_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::ConfigFile { .. } => EXIT_USAGE,
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => EXIT_USAGE,
                ErrorKind::Input => EXIT_INPUT,
                ErrorKind::Numerical => EXIT_NUMERICAL,
            },
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
