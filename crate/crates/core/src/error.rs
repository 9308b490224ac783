use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, non-finite data,
    /// parameter out of its admissible range).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A probe point fell outside the lattice (box plus collar).
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// An operation that needs `x != z` (equivalently `y != 0`) was called on
    /// the diagonal.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// A stated precondition does not hold (e.g. wrong distance regime for a
    /// bound).
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// Fixed-point iteration residual grew instead of shrinking.
    #[error("solver diverged: {0}")]
    Diverged(String),

    /// A game trajectory exceeded the step cap without leaving the domain.
    #[error("trajectory did not terminate within {0} steps")]
    NonTerminating(u64),

    /// Input that makes the requested statistic undefined.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
