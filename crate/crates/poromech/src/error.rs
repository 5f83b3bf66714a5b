use mgr_core::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PoroError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error("Newton failed to converge: {0}")]
    NewtonFailed(String),

    #[error("time step {step} failed after {halvings} halvings at t = {time} s")]
    TimestepFailed { step: usize, halvings: usize, time: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PoroError {
    fn from(e: std::io::Error) -> Self {
        PoroError::Io(e.to_string())
    }
}

impl From<csv::Error> for PoroError {
    fn from(e: csv::Error) -> Self {
        PoroError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PoroError>;
