use mgr_core::SolverError;
use mgr_poromech::PoroError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Malformed or inconsistent input (exit code 2).
    #[error("configuration error: {0}")]
    Config(String),

    /// A solve or time step failed (exit code 1).
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Solver(_) => 1,
            BenchError::Config(_) | BenchError::Io(_) => 2,
        }
    }
}

impl From<PoroError> for BenchError {
    fn from(e: PoroError) -> Self {
        match e {
            PoroError::InvalidInput(m) => BenchError::Config(m),
            PoroError::Io(m) => BenchError::Io(m),
            other => BenchError::Solver(other.to_string()),
        }
    }
}

impl From<SolverError> for BenchError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig(m) => BenchError::Config(m),
            SolverError::InvalidLayout(m) => BenchError::Config(m),
            SolverError::MatrixMarket(m) => BenchError::Config(m),
            SolverError::Io(m) => BenchError::Io(m),
            e @ SolverError::DimensionMismatch { .. } => BenchError::Config(e.to_string()),
            other => BenchError::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
