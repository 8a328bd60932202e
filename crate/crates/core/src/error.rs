use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpotError>;

#[derive(Debug, Error)]
pub enum SpotError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("feed unavailable: {0}")]
    FeedUnavailable(String),

    #[error("feed parse error in entry {entry}: {message}")]
    FeedParse { entry: String, message: String },

    #[error("{kind} already exists: {id}")]
    Conflict { kind: &'static str, id: String },

    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },

    #[error("table {0} has no numeric body")]
    NoBody(String),

    #[error("unknown company: {0}")]
    UnknownCompany(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("stale audit length for record {record_id}: expected {expected}, found {actual}")]
    StaleAudit {
        record_id: String,
        expected: usize,
        actual: usize,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SpotError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        SpotError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn not_found(kind: &'static str, id: impl Into<String>) -> Self {
        SpotError::NotFound {
            kind,
            id: id.into(),
        }
    }
}
