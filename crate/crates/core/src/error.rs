// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("photon-number cutoff too small: truncated weight {lost:.3e} exceeds {limit:.1e}")]
    Truncation { lost: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsupported modulus {0}: not squarefree")]
    UnsupportedModulus(u64),

    #[error("singular device parameters: {0}")]
    SingularParameters(String),

    #[error(
        "integrator failure: trace drift {drift:.3e}; retry with dt_max <= {suggested_dt:.3e} s"
    )]
    IntegratorFailure { drift: f64, suggested_dt: f64 },

    #[error("jump probability {0:.3e} per step exceeds 0.1")]
    StepSizeViolation(f64),

    #[error("degenerate measurement outcome {outcome}: probability {probability:.3e}")]
    DegenerateOutcome { outcome: u8, probability: f64 },

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::IntegratorFailure { .. }
                | Error::StepSizeViolation(_)
                | Error::DegenerateOutcome { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
