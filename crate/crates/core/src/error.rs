use thiserror::Error;

/// Errors raised by the operator toolkit, the solver and the front-ends.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible polytope: the halfspace system has no solution")]
    InfeasiblePolytope,

    #[error("polytope too large: dimension {dim} with {facets} facets (limits are 8 and 32)")]
    PolytopeTooLarge { dim: usize, facets: usize },

    #[error("point lies outside the operator domain (distance {distance:.3e})")]
    OutsideDomain { distance: f64 },

    #[error("iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("generalized equation has no solution: {0}")]
    EmptySolutionSet(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("velocity set is empty within radius {radius:.3e} (nearest element has norm {nearest:.3e})")]
    EmptyVelocitySet { radius: f64, nearest: f64 },

    #[error("initial state is not admissible: x0 is not in the domain of the operator at (t0, x0)")]
    Inadmissible,

    #[error("step h = {h} violates h*c1 < 1/2 (c1 = {c1})")]
    StepTooLarge { h: f64, c1: f64 },

    #[error("non-finite value produced at step {index}")]
    NonFinite { index: usize },

    #[error("solver failed at step {index}: {source}")]
    StepFailure {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
