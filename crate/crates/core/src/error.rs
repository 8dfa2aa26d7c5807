use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the recommender pipeline.
#[derive(Debug, Error)]
pub enum QrecError {
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown item id `{0}`")]
    UnknownItem(String),

    #[error("unknown user id `{0}`")]
    UnknownUser(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("empty rating set")]
    EmptyRatings,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} index {index} out of range (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Solve { residual: f64, tolerance: f64 },

    #[error("offline training diverged at iteration {iteration}: loss = {loss}")]
    Diverged { iteration: usize, loss: f64 },

    #[error("no questions left in the pool")]
    NoQuestionsLeft,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, QrecError>;

impl QrecError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QrecError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        QrecError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
