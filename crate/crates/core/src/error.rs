use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator is not selfadjoint (max asymmetry {0:.3e})")]
    NotSelfAdjoint(f64),

    #[error("kernel is not permutation symmetric (deviation {0:.3e})")]
    NotSymmetric(f64),

    #[error(
        "memory budget exceeded: dimension {dim} needs {required_bytes} bytes per matrix \
         (budget allows dimension {max_dim})"
    )]
    BudgetExceeded {
        dim: usize,
        max_dim: usize,
        required_bytes: u128,
    },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("kernel is fully degenerate: every Hoeffding component of positive order vanishes")]
    FullyDegenerate,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation inadequate: {0}")]
    Truncation(String),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
