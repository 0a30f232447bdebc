use thiserror::Error;

/// Errors raised across the estimation, graph, and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("estimate undefined: {0}")]
    UndefinedEstimate(&'static str),

    #[error("insufficient samples: stream {stream} has {have} samples, need {need}")]
    InsufficientSamples { stream: usize, have: usize, need: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible graph request: {0}")]
    Infeasible(String),

    #[error("random regular graph generation gave up after {0} restarts")]
    RetryExhausted(usize),

    #[error("no live edge between {0} and {1}")]
    NoSuchEdge(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
