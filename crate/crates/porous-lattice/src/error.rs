//! Crate-wide error type and the mapping onto process exit codes.

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was handed parameters outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A path shift that is not a grid multiple or leaves the sampled domain.
    #[error("shift by {shift} invalid: {reason}")]
    BadShift { shift: f64, reason: String },

    /// A time outside the sampled domain of a path was requested.
    #[error("time {t} outside sampled domain [{t_min}, {t_max}]")]
    OutOfDomain { t: f64, t_min: f64, t_max: f64 },

    /// The solution left the trust region of the integrator.
    #[error("solution blow-up at t = {t}: {what}")]
    BlowUp { t: f64, what: String },

    /// The step controller could not make progress at the requested tolerance.
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// Configuration file problems (syntax or semantics).
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error: 2 for configuration problems,
    /// 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Json(_) => crate::EXIT_CONFIG,
            Error::BlowUp { .. } | Error::StepSizeUnderflow { .. } => crate::EXIT_NUMERICAL,
            Error::InvalidParameter(_) | Error::BadShift { .. } | Error::OutOfDomain { .. } => {
                crate::EXIT_CONFIG
            }
        }
    }
}
