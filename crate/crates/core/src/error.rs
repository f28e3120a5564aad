use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix or vector contains non-finite entries")]
    InvalidMatrix,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix is not positive definite")]
    NotPd,
    #[error("signal model is not contractive: {0}")]
    ModelNotContractive(String),
    #[error("problem cannot be reduced to the canonical sensor form: {0}")]
    NotReducible(String),
    #[error("step size dt = {dt} violates dt * lambda < 0.5 (lambda = {lambda})")]
    UnstableStep { dt: f64, lambda: f64 },
    #[error("filter diverged at t = {t}")]
    DivergedFilter { t: f64 },
    #[error("damped Newton found no fixed point after {0} iterations")]
    NoFixedPoint(usize),
    #[error("bound requires a positive decay rate, got {0}")]
    NotStable(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("admissibility conditions do not hold: {0}")]
    ConditionsNotMet(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
