use std::fmt;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model parameter is outside its admissible range (e.g. unstable AR
    /// coefficients, non-positive smoothness).
    InvalidParameter(String),
    /// A runtime input is malformed (length mismatch, non-finite value, ...).
    InvalidInput(String),
    /// The leaf-membership design leads to a Gram matrix that stays
    /// rank-deficient even after the ridge fallback.
    DegeneratePartition(String),
    /// Covariance parameter estimation cannot proceed (e.g. constant residuals).
    Estimation(String),
    /// Data generation failed (e.g. Cholesky of the sampling covariance).
    Generation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DegeneratePartition(msg) => write!(f, "degenerate partition: {msg}"),
            Error::Estimation(msg) => write!(f, "estimation failed: {msg}"),
            Error::Generation(msg) => write!(f, "data generation failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
