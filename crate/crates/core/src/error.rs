//! Error types shared across the solver library.

use thiserror::Error;

/// Errors produced by instance constructors, solvers, and verification
/// oracles.
#[derive(Debug, Error)]
pub enum FairDivError {
    /// A solver that requires identical valuations was given agents with
    /// differing tables.
    #[error("valuations are not identical: {0}")]
    NotIdentical(String),

    /// A valuation takes values outside the range a solver supports.
    #[error("valuation range violation: {0}")]
    InvalidRange(String),

    /// More than two distinct nonzero values occur across the tables.
    #[error("instance is not trilean: {0}")]
    NotTrilean(String),

    /// Classification was requested under a regime that does not cover the
    /// values actually present.
    #[error("invalid classification regime: {0}")]
    InvalidRegime(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    /// A violation-fixing pass met an EF1 violation outside the patterns it
    /// is able to repair.
    #[error("unexpected EF1 violation pattern: {0}")]
    UnexpectedViolation(String),

    /// A solver specialised to a fixed agent count was given another.
    #[error("solver requires {expected} agents, instance has {actual}")]
    WrongAgentCount { expected: usize, actual: usize },

    /// Per-type thresholds differ across agents where a common threshold is
    /// required.
    #[error("thresholds are not common across agents: {0}")]
    NotCommonThreshold(String),

    /// An exhaustive search would exceed its configured assignment budget.
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Malformed input data: inconsistent sizes, overlapping bundles, out of
    /// range indices, and similar structural defects.
    #[error("malformed structure: {0}")]
    Structure(String),
}

pub type Result<T> = std::result::Result<T, FairDivError>;
