use thiserror::Error;

/// Errors raised by the numerical and physical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    NonConvergence { estimate: f64, tolerance: f64 },

    #[error("invalid bracket [{lo}, {hi}]: endpoint values share a strict sign")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("degenerate state: normalization denominator {denominator:e} is not positive")]
    DegenerateState { denominator: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("achieving interval touches the time window [{lo}, {hi}]")]
    WindowTooSmall { lo: f64, hi: f64 },

    #[error("mean energy {0} cannot be reached by any positive sigma")]
    Unattainable(f64),
}

impl Error {
    /// Short machine-readable tag, used in JSON error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "non_convergence",
            Error::InvalidBracket { .. } => "invalid_bracket",
            Error::DegenerateState { .. } => "degenerate_state",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::Unattainable(_) => "unattainable",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
