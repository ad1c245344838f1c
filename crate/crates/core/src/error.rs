use thiserror::Error;

use crate::model::Assumption;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} must be positive")]
    NonPositiveInput(&'static str),

    #[error("horizon {horizon} is not an integer multiple of the step {step}")]
    NonAlignedHorizon { horizon: f64, step: f64 },

    #[error("index {index} outside of the valid range 0..={max}")]
    IndexOutOfRange { index: i64, max: usize },

    #[error("coefficient set declares no constant for {0}")]
    MissingConstant(Assumption),

    #[error("neutral fixed point did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("freeze period 1/{n} is not a multiple of the mesh step {step}")]
    NonAlignedFreeze { n: usize, step: f64 },

    #[error("truncation radius must be positive, got {0}")]
    NonPositiveR(f64),

    #[error("diffusion matrix is singular")]
    SingularSigma,

    #[error("term {term} at eps index {eps_index} is not a positive finite number")]
    NonPositiveTerm { eps_index: usize, term: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
