use thiserror::Error;

use crate::diag::DiagnosticReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} is outside the domain at x = {x}")]
    Domain { what: &'static str, x: f64 },

    /// Interval mass vanished below the representable range.
    #[error("interval mass underflow at x = {x}")]
    Underflow { x: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("series truncation budget violated: dropped mass {achieved:e} exceeds budget {budget:e}")]
    Truncation { achieved: f64, budget: f64 },

    #[error("grid steps differ: {0} vs {1}")]
    StepMismatch(f64, f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("law has infinite mean")]
    InfiniteMean,

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("inversion failed: negative mass {negative_mass:e} above clamp threshold")]
    Inversion { negative_mass: f64 },

    #[error("normalizer vanished at x = {x}")]
    NormalizerUnderflow {
        x: f64,
        partial: Box<DiagnosticReport>,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical trouble.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Domain { .. }
                | Error::StepMismatch(..)
                | Error::Precondition(_)
                | Error::InfiniteMean
                | Error::Regime(_)
                | Error::Unsupported(_)
                | Error::Parse(_)
                | Error::Json(_)
        )
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
