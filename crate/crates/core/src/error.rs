use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    InvalidDimension { min: usize, got: usize },

    #[error("point outside the simplex polytope: {0}")]
    OutsidePolytope(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("rows {i} and {j} are not mutually absolutely continuous")]
    SingularPair { i: usize, j: usize },

    #[error("point lies on the fiber kernel (1 + h\u{b7}x = 0)")]
    OnFiberKernel,

    #[error("base point outside the vertex hull: {0}")]
    InvalidBase(String),

    #[error("operation requires an interior base point with no lost mass")]
    BoundaryBase,

    #[error("fiber does not determine an anchored law: {0}")]
    NotRealizable(String),

    #[error("support growth exceeds the configured cap: {0}")]
    TooLarge(String),

    #[error("feasibility precondition violated: {0}")]
    NotFeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeds the low-budget regime; use the frontier instead: {0}")]
    OutOfRegime(String),

    #[error("covariance matrix is singular")]
    SingularCovariance,
}

pub type Result<T> = core::result::Result<T, Error>;
