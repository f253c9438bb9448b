use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range (valid 0..{len})")]
    OutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("missing antenna coverage: {0}")]
    Coverage(String),

    #[error("singular update: {0}")]
    Singular(String),

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("unknown {what}: `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad input data or configuration rather than
    /// a failure during computation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Io { .. }
                | Error::Json { .. }
                | Error::CorruptCheckpoint(_)
                | Error::CheckpointVersion { .. }
                | Error::Unknown { .. }
                | Error::Empty(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
