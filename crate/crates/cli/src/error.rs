use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_EXTREMAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cpcert_core::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_indeterminate() => EXIT_INDETERMINATE,
            _ => EXIT_INVALID,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if e.is_indeterminate() => "indeterminate",
            CliError::Core(_) => "invalid_input",
            CliError::Read { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub kind: &'static str,
    pub exit_code: i32,
}

impl From<&CliError> for ErrorReport {
    fn from(e: &CliError) -> Self {
        Self {
            error: e.to_string(),
            kind: e.kind(),
            exit_code: e.exit_code(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
