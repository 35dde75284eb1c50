use thiserror::Error;

/// Errors raised by the probability models and the beam simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot condition on an event of probability {0:e}")]
    ConditioningOnNull(f64),

    #[error("relevance probability {0} is degenerate: one of P(X|R), P(X|not R) is undefined")]
    DegenerateRelevance(f64),

    #[error("cannot post-select on a test passed with probability {0:e}")]
    PostSelectionOnNull(f64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(
        "no progress: {survivors} of {requested} docuscles reached the final stage after {emitted} emissions"
    )]
    ProgressImpossible {
        requested: u64,
        survivors: u64,
        emitted: u64,
    },

    #[error("estimate `{0}` is not defined for this frequency table")]
    AbsentEstimate(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
