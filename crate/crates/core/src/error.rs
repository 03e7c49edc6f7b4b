use num_complex::Complex64;
use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The caller violated a documented precondition.
    Precondition,
    /// The computation ran but could not produce a trustworthy number.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coefficient at index {index}")]
    NonFinite { index: usize },

    #[error("series is not tangent to the identity (need c0 = 0, c1 = 1)")]
    NotNormalized,

    #[error("inner series has non-zero constant term {c0}; composition undefined")]
    NonZeroConstant { c0: Complex64 },

    #[error("pole of the map near z = {z}")]
    Pole { z: Complex64 },

    #[error("divisor breakdown at k = {k}: |lambda^k - lambda| = {divisor:e}")]
    DivisorBreakdown { k: usize, divisor: f64 },

    #[error("small-divisor breakdown at k = {k}: |lambda^k - lambda| = {divisor:e}")]
    SmallDivisorBreakdown { k: usize, divisor: f64 },

    #[error("orbit did not reach the entry radius within {budget} iterations")]
    NoConvergence { budget: u64 },

    #[error("no usable radial samples: {0}")]
    EstimateUnavailable(String),

    #[error("radius {r} exceeds the reliable evaluation radius (truncation tail {tail:e})")]
    UnreliableRadius { r: f64, tail: f64 },

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("construction stalled at step {step}: {reason}")]
    ConstructionStalled { step: usize, reason: String, partial: Box<crate::construction::ConstructionReport> },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonFinite { .. } | Error::NotNormalized | Error::NonZeroConstant { .. } | Error::Precondition(_) => {
                ErrorClass::Precondition
            }
            Error::Pole { .. }
            | Error::DivisorBreakdown { .. }
            | Error::SmallDivisorBreakdown { .. }
            | Error::NoConvergence { .. }
            | Error::EstimateUnavailable(_)
            | Error::UnreliableRadius { .. }
            | Error::BracketFailure(_)
            | Error::ConstructionStalled { .. } => ErrorClass::Numerical,
        }
    }

    /// Stable snake_case tag for structured error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::NotNormalized => "not_normalized",
            Error::NonZeroConstant { .. } => "non_zero_constant",
            Error::Pole { .. } => "pole",
            Error::DivisorBreakdown { .. } => "divisor_breakdown",
            Error::SmallDivisorBreakdown { .. } => "small_divisor_breakdown",
            Error::NoConvergence { .. } => "no_convergence",
            Error::EstimateUnavailable(_) => "estimate_unavailable",
            Error::UnreliableRadius { .. } => "unreliable_radius",
            Error::BracketFailure(_) => "bracket_failure",
            Error::ConstructionStalled { .. } => "construction_stalled",
            Error::Precondition(_) => "precondition",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
