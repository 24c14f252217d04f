use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command line and file layer, grouped by exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Ingestion(String),
    #[error(transparent)]
    Compute(#[from] shapdec_core::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn ingestion(msg: impl Into<String>) -> Self {
        AppError::Ingestion(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Ingestion(_) => 2,
            AppError::Compute(_) | AppError::Output { .. } => 3,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
