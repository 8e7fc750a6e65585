use std::fmt;

use oudisp_core::Error;

/// A run failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input; exit code 1.
    Invalid { field: String, message: String },
    /// A numerical layer refused or failed; exit code 2.
    Numerical(Error),
    /// Report or field file could not be written; exit code 1.
    Io(String),
}

impl Failure {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Numerical(_) => 2,
            Failure::Invalid { .. } | Failure::Io(_) => 1,
        }
    }

    /// Core errors that reflect the request rather than the numerics.
    pub fn from_core(field: &str, e: Error) -> Self {
        match e {
            Error::OutOfRange(_)
            | Error::InvalidGrid(_)
            | Error::DimensionMismatch(_)
            | Error::NonPsdInput { .. }
            | Error::GaugeMismatch { .. }
            | Error::Format(_) => Failure::invalid(field, e.to_string()),
            e => Failure::Numerical(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid { field, message } => write!(f, "invalid {field}: {message}"),
            Failure::Numerical(e) => write!(f, "{e}"),
            Failure::Io(msg) => write!(f, "i/o: {msg}"),
        }
    }
}
