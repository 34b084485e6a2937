//! Error types shared across the library.

use std::fmt;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input lies outside the mathematical domain of the operation
    /// (invalid signature, point on a singular set, argument past a pole).
    Domain(String),
    /// Input is valid but outside the asymptotic regime the requested
    /// formula is stated for; the caller should pick a different route.
    Regime(String),
    /// A quadrature (or iteration) terminated without certifying the
    /// requested tolerance.  The best value obtained and its a-posteriori
    /// error estimate are carried so callers can still use them knowingly.
    Accuracy {
        message: String,
        value: f64,
        err_estimate: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Regime(msg) => write!(f, "regime error: {msg}"),
            Error::Accuracy {
                message,
                value,
                err_estimate,
            } => write!(
                f,
                "accuracy error: {message} (best value {value:e}, error estimate {err_estimate:e})"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// The best value carried by an [`Error::Accuracy`], if any.
    pub fn carried_value(&self) -> Option<(f64, f64)> {
        match self {
            Error::Accuracy {
                value,
                err_estimate,
                ..
            } => Some((*value, *err_estimate)),
            _ => None,
        }
    }
}
