use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside the domain of the operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The scenario violates one or more model invariants.
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("quadrature did not converge on [{lower}, {upper}] after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        lower: f64,
        upper: f64,
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    /// The fixed-point iteration ran out of iterations or diverged.
    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// A delay exceeds its target even with the serving base station fully utilized.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
