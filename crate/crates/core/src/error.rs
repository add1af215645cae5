use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("no frames available from {0}")]
    EmptySequence(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("environment error: {0}")]
    Environment(String),

    #[error("worker protocol error: {0}")]
    Protocol(String),

    #[error("classifier timed out after {seconds}s on {frame}")]
    Timeout { frame: String, seconds: f64 },

    #[error("classifier worker crashed: {0}")]
    WorkerCrashed(String),

    #[error("no sidecar label for {key}")]
    Lookup { key: String },

    #[error("classification failed for {frame}: {message}")]
    Classification { frame: String, message: String },

    #[error("manifest {path} line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

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

    pub(crate) fn decode(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Decode {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
