use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {0} is not a positive perfect square")]
    NonSquareLength(usize),

    #[error("symmetric eigensolver failed to converge on a {dim}x{dim} block")]
    EigenFailure { dim: usize },

    #[error("graph is not chordal")]
    NotChordal,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate entry (matrix {matno}, block {block}, {row}, {col})")]
    DuplicateEntry {
        line: usize,
        matno: usize,
        block: usize,
        row: usize,
        col: usize,
    },

    #[error("duplicate coordinate ({row}, {col}) in symmetric matrix")]
    DuplicateCoordinate { row: usize, col: usize },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("factorization of the {dim}x{dim} system failed: {reason}")]
    FactorizationFailure { dim: usize, reason: String },

    #[error("tau = {tau:e} is below the recovery threshold")]
    TauZero { tau: f64 },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("report: {0}")]
    Report(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
