use thiserror::Error;

use crate::grid::GridError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("hyperplane normal is degenerate (‖a‖∞ = {0:.3e})")]
    DegenerateNormal(f64),
    #[error("dual vector violates the dual cone: {0}")]
    InvalidDual(String),
    #[error("vertex enumeration supports at most 4 dimensions, got {0}")]
    DimensionTooLarge(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("big-M value {m} is below the required bound {required}")]
    BigMTooSmall { m: f64, required: f64 },
    #[error("{0}")]
    Internal(String),
    #[error("worker {worker} failed: {source}")]
    Worker {
        worker: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed data: {0}")]
    Data(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
