use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular stencil at node {node} (reciprocal condition estimate {rcond:.3e})")]
    SingularStencil { node: usize, rcond: f64 },

    #[error("return mapping did not converge at material point {point} (residual {residual:.3e})")]
    MaterialNonConvergence { point: usize, residual: f64 },

    #[error("degenerate plastic flow: zero trial deviator with positive plastic multiplier")]
    DegenerateFlow,

    #[error("point ({x}, {y}) lies outside the domain: {what}")]
    OutsideDomain { x: f64, y: f64, what: String },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("undefined norm: {0}")]
    UndefinedNorm(String),

    #[error("matrix of size {n} exceeds the dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("config key `{key}`: {msg}")]
    Parse { key: String, msg: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
