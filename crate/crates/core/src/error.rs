use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("design matrix is rank deficient; use ridge regression instead")]
    RankDeficient,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("model saturated at every lambda")]
    Saturated,

    #[error("{path}: {message}")]
    Table { path: String, message: String },

    #[error("every tuning cell failed to fit")]
    AllCellsInfeasible,

    #[error("{failed} of {total} replicates failed, aborting")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
