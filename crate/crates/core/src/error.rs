use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("duplicate entry for user `{0}`")]
    Duplicate(String),
    #[error("unknown user `{0}`")]
    NotFound(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unknown mode `{0}` (valid modes: F, R, Db, Dq, DbDq, FULL)")]
    UnknownMode(String),
    #[error("invalid config key `{key}`: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by data that is well-formed but unusable
    /// (single-class labels, too few samples).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateLabels(_) | Error::InsufficientData(_) | Error::EmptyInput(_)
        )
    }
}
