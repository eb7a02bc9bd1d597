use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] dynpictures::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checks failed: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::ChecksFailed(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Library errors raised while checking a config count as validation errors.
pub(crate) fn validation(e: dynpictures::Error) -> CliError {
    CliError::Validation(e.to_string())
}

pub type CliResult<T> = std::result::Result<T, CliError>;
