use thiserror::Error;

/// Errors raised by the modelling and acquisition layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Cholesky factorization failed with jitter {jitter:e} (diagonal condition estimate {condition:e})")]
    Cholesky { jitter: f64, condition: f64 },

    #[error("acquisition `{0}` produced no finite value on the domain")]
    NonFiniteAcquisition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
