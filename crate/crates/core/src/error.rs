use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A probability or parameter lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of a domain type is violated.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Invalid experiment or environment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A data file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    /// A data file parsed but its contents are invalid.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by input data rather than configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Csv(_) | Error::Json(_)
        )
    }

    /// Process exit status for the command-line tool: 3 for data errors,
    /// 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_data_error() {
            3
        } else {
            2
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
