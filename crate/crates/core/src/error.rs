use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: usize, message: String },

    #[error("invalid date {0:?}")]
    InvalidDate(String),

    #[error("invalid interval: completion {completion} is not after start {start}")]
    InvalidInterval {
        start: chrono::NaiveDate,
        completion: chrono::NaiveDate,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("phase {0} is outside 1..=4")]
    InvalidPhase(i64),

    #[error("format error: {0}")]
    Format(String),

    #[error("no embedding for key {0:?}")]
    MissingEmbedding(String),

    #[error("dimension mismatch: {what} expected {expected}, got {got}")]
    Dimension { what: String, expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("undefined metric: {0}")]
    Undefined(&'static str),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidPhase(_) => ErrorClass::Usage,
            Error::NonFinite(_) | Error::Singular(_) | Error::Undefined(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}

/// Fails with [`Error::NonFinite`] if any entry is NaN or infinite.
pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
