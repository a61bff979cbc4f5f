use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank {rank} out of range 1..={n_objects}")]
    RankOutOfRange { rank: usize, n_objects: usize },

    #[error("{path}: line {line}: {message}")]
    TraceParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown policy `{0}` (expected session_lfu, lru or lfu_classic)")]
    UnknownPolicy(String),

    #[error("closed form is singular at alpha = 1")]
    SingularAlpha,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
