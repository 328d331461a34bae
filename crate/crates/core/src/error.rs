use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("matrix is not an orthogonal projector (residual {0:e})")]
    NotProjector(f64),

    #[error("invalid LHS model: {0}")]
    InvalidModel(String),

    #[error("inconsistent distribution: {0}")]
    Inconsistent(String),

    #[error("state is not entangled (Schmidt rank {0})")]
    NotEntangled(usize),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("no shots recorded for diagonal setting x = y = {0}")]
    MissingSetting(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
