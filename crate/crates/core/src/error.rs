use thiserror::Error;

/// Errors raised by the formula and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A facet spec does not fit the ensemble it is evaluated against.
    #[error("invalid facet spec: {0}")]
    InvalidSpec(String),

    /// Step-halving did not reach the requested tolerance.
    #[error("refinement failed after {refinements} refinements: last iterates {previous:e} and {last:e}")]
    RefinementFailure {
        previous: f64,
        last: f64,
        refinements: usize,
    },

    /// The bridge density at the requested endpoint is too small to divide by.
    #[error("bridge endpoint r = {r} is out of range for n = {n} (|r| must not exceed {limit})")]
    OutOfRange { n: usize, r: f64, limit: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
