//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatError {
    /// Tensor shapes do not satisfy an op's contract.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// Invalid configuration value or key.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed data: images, labels, manifests, checkpoints.
    #[error("format error: {0}")]
    Format(String),

    /// A computation produced NaN/Inf or hit an invalid runtime state.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CatError {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        CatError::Shape { op, detail: detail.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CatError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CatError>;
