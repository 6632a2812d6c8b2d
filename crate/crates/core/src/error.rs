use std::path::PathBuf;

use crate::backend::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside the domain accepted by the operation.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("could not parse importance rating from reply {raw:?}")]
    RatingParse { raw: String },

    #[error("line {line}: {message}")]
    Ingest { line: usize, message: String },

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("snapshot format version {found} is not supported (expected {expected})")]
    SnapshotVersion { found: String, expected: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad caller input (exit code 2 in the CLI).
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter { .. }
                | Error::Validation(_)
                | Error::Precondition(_)
                | Error::Ingest { .. }
                | Error::Config(_)
                | Error::SnapshotVersion { .. }
        )
    }
}
