use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate observation for id `{id}` at time {time} in channel `{channel}`")]
    DuplicateObservation { id: String, time: f64, channel: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("channel `{0}` has no observed entries in the training split")]
    EmptyChannel(String),

    #[error("signature coefficient budget exceeded: {requested} coefficients > {budget}")]
    CoefficientBudget { requested: usize, budget: usize },

    #[error("input contains missing entries at row {row}")]
    MissingEntries { row: usize },

    #[error("cholesky factorisation failed after jitter escalation (last jitter {jitter:e})")]
    Cholesky { jitter: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("all {0} hyperparameter search arms diverged")]
    AllArmsDiverged(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
