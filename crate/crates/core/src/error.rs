use thiserror::Error;

/// Failures raised by the numerical layers.
///
/// Every message starts with the variant name so that front ends can surface
/// it verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NonFinite: {0} contains NaN or infinite entries")]
    NonFinite(&'static str),
    #[error("Overflow: {0}")]
    Overflow(String),
    #[error("NonPSDInput: diffusion matrix has eigenvalue {min_eig:e} below -{tol:e}")]
    NonPsdInput { min_eig: f64, tol: f64 },
    #[error("NoInvariantMeasure: spectral abscissa {abscissa:e} is not negative")]
    NoInvariantMeasure { abscissa: f64 },
    #[error("NotHypoelliptic: Gramian smallest eigenvalue {min_eig:e} at t = {t}")]
    NotHypoelliptic { t: f64, min_eig: f64 },
    #[error("GridTooCoarse: kernel width {width:e} is below 3 grid spacings ({spacing:e})")]
    GridTooCoarse { width: f64, spacing: f64 },
    #[error("GaugeMismatch: expected {expected} gauge, found {found}")]
    GaugeMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("GridAliasing: per-step phase {phase:.4} exceeds the limit {limit:.4}")]
    GridAliasing { phase: f64, limit: f64 },
    #[error("SingularA: Gaussian matrix is not invertible")]
    SingularA,
    #[error("SingularTime: t = {t} lies within {tau:e} of a multiple of pi")]
    SingularTime { t: f64, tau: f64 },
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("Format: {0}")]
    Format(String),
}

impl Error {
    /// Variant name, as it appears at the start of the message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "NonFinite",
            Error::Overflow(_) => "Overflow",
            Error::NonPsdInput { .. } => "NonPSDInput",
            Error::NoInvariantMeasure { .. } => "NoInvariantMeasure",
            Error::NotHypoelliptic { .. } => "NotHypoelliptic",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::GaugeMismatch { .. } => "GaugeMismatch",
            Error::GridAliasing { .. } => "GridAliasing",
            Error::SingularA => "SingularA",
            Error::SingularTime { .. } => "SingularTime",
            Error::OutOfRange(_) => "OutOfRange",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NoConvergence(_) => "NoConvergence",
            Error::Format(_) => "Format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
