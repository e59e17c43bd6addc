use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("infeasible benchmark size: n={nodes}, m={arcs} ({reason})")]
    InfeasibleSize {
        nodes: usize,
        arcs: usize,
        reason: &'static str,
    },

    #[error("enumeration of {width} arcs exceeds the cap of {cap}; use an estimator instead")]
    CapExceeded { width: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("rank-deficient design matrix ({columns} columns); add regularization")]
    RankDeficient { columns: usize },

    #[error("{model} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        model: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
