use thiserror::Error;

/// Errors raised by the sparse kernels, smoothers and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),

    #[error("zero or missing diagonal entry in row {row}")]
    SingularDiagonal { row: usize },

    #[error("singular 2x2 block for cell {cell}")]
    SingularBlock { cell: usize },

    #[error("zero pivot in row {row} during incomplete factorization")]
    ZeroPivot { row: usize },

    #[error("singular matrix in dense factorization (column {column})")]
    SingularDense { column: usize },

    #[error("invalid field layout: {0}")]
    InvalidLayout(String),

    #[error("invalid partitioning: {0}")]
    InvalidPartition(String),

    #[error("invalid MGR configuration: {0}")]
    InvalidConfig(String),

    #[error("ideal transfers refused: F block has {rows} rows, cap is {cap}")]
    IdealTooLarge { rows: usize, cap: usize },

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
