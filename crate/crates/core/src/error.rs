use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by graph ingestion, the solvers, and the verification layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("node {0} is isolated (degree 0)")]
    IsolatedNode(usize),

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense computation on {n} nodes exceeds the cap of {cap}; {hint}")]
    SizeCap { n: usize, cap: usize, hint: String },

    #[error("push cap of {cap} exceeded after {pushes} pushes ({context})")]
    PushCapExceeded {
        cap: usize,
        pushes: usize,
        context: String,
    },

    #[error("numerical guard tripped: {0}")]
    Numerical(String),

    #[error("solver failed on column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
