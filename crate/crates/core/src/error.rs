use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the analysis pipeline.
///
/// The variants fall into three families (see [`Error::kind`]): malformed or
/// unusable input data, invalid configuration, and numerical failures inside
/// the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: u64,
        message: String,
    },

    #[error("{context}: line {line}: non-positive price {value} for '{entity}'")]
    NonPositivePrice {
        context: String,
        line: u64,
        entity: String,
        value: f64,
    },

    #[error("{context}: line {line}: missing price for '{entity}'")]
    MissingPrice {
        context: String,
        line: u64,
        entity: String,
    },

    #[error("{context}: duplicate month {month}")]
    DuplicateMonth { context: String, month: String },

    #[error("{context}: non-positive PE {value} for {month}")]
    NonPositivePe {
        context: String,
        month: String,
        value: f64,
    },

    #[error("{0}: empty panel after ingestion")]
    EmptyPanel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("write failed: {0}")]
    Write(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse error classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Config,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) => ErrorKind::Config,
            Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn parse(context: &str, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.to_string(),
            line,
            message: message.into(),
        }
    }
}
