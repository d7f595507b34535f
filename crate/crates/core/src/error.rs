use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("interference-limited SINR is undefined for a single user")]
    SingleUser,

    #[error("user {0} sees exactly zero interference; interference-limited SINR is unbounded")]
    ZeroInterference(usize),

    #[error("action index {index} out of range 0..{count}")]
    ActionOutOfRange { index: usize, count: usize },

    #[error("joint action space {count} exceeds limit {limit}")]
    ActionSpaceTooLarge { count: usize, limit: usize },

    #[error("grid of {points} points exceeds limit {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at episode {episode}, step {step}: loss = {loss}")]
    Divergence {
        episode: usize,
        step: usize,
        loss: f64,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("manifest: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
