use thiserror::Error;

use crate::validity::ValidityReport;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("closed form not valid here: {0}")]
    Validity(ValidityReport),

    #[error("singular parameters: {0}")]
    Singular(String),

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Convergence { estimate: f64, error: f64 },

    #[error("indeterminate ratio: {0}")]
    IndeterminateRatio(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
