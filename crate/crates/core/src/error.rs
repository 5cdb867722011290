use std::ops::Range;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    InvalidRow { path: PathBuf, row: usize, message: String },

    #[error("invalid label {0}: expected 0 or 1")]
    InvalidLabel(i64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite feature value in sample {sample}")]
    NonFinite { sample: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("endpoint error for texts {}..{}: {kind}", range.start, range.end)]
    Endpoint { range: Range<usize>, kind: EndpointError },

    #[error("endpoint unreachable: {0}")]
    Unreachable(String),

    #[error("incompatible endpoint: {0}")]
    Incompatible(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { expected: u32, found: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("expected {expected} probability rows, got {found}")]
    RowCount { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad user input or configuration rather than
    /// a failure while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Precondition(_) | Error::InvalidLabel(_) | Error::FormatVersion { .. }
        ) || matches!(self, Error::Fold { source, .. } if source.is_config())
    }
}
