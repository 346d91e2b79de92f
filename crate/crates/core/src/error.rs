use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the core library.
#[derive(Debug, Error)]
pub enum QgatError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("index {index} out of range for {what} of size {size}")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("non-finite gradient in `{param}` at index {index}")]
    NonFiniteGradient { param: String, index: usize },

    #[error(
        "stale gradient tape: recorded at parameter version {recorded}, layer is at {current}"
    )]
    StaleTape { recorded: u64, current: u64 },

    #[error("empty split: {0}")]
    EmptySplit(String),
}

pub type Result<T> = std::result::Result<T, QgatError>;

impl QgatError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QgatError::Io {
            path: path.into(),
            source,
        }
    }
}
