use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitian(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NonPositive(f64),

    #[error("trace is {0} but should be 1")]
    TraceMismatch(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("state is rank deficient (smallest eigenvalue {0:.3e})")]
    RankDeficient(f64),

    #[error("invalid input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
