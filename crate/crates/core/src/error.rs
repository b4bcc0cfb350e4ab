use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `ωᵀAω` vanishes: the read-out direction lies in the kernel of the
    /// covariance and the Gaussian-CDF loss is undefined.
    #[error("degenerate read-out direction: omega^T A omega = {variance:e}")]
    DegenerateDirection { variance: f64 },

    /// The covariance is not positive definite, so the smoothed objective
    /// (and the bounds built on it) do not apply.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("serialisation error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
