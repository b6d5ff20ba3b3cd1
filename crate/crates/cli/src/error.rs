use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    ParseOrIo = 1,
    InvalidConfig = 2,
    Numerical = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: column '{column}' not found in header")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    BadNumber {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: no data rows")]
    EmptyFile { path: PathBuf },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] gkdr::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::MissingColumn { .. }
            | CliError::BadNumber { .. }
            | CliError::EmptyFile { .. } => ExitCode::ParseOrIo,
            CliError::Config(_) => ExitCode::InvalidConfig,
            CliError::Core(e) if e.is_numerical() => ExitCode::Numerical,
            CliError::Core(gkdr::Error::NonFinite(_)) => ExitCode::ParseOrIo,
            CliError::Core(_) => ExitCode::InvalidConfig,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
