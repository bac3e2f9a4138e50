//! EF1 allocation solvers for discretized and separable single-peaked
//! valuations of indivisible items, plus independent fairness verification.
//!
//! The solvers cover Boolean `{0,-1}` valuations (identical or not),
//! identical Boolean `{0,1}` valuations, identical trilean `{0,a,b}`
//! valuations via canonicalization to `{0,-1,1}` or `{0,1,2}`, and separable
//! single-peaked valuations (three agents with arbitrary thresholds, or any
//! number of agents with a common threshold per type). The `verify` module
//! checks EF1 and EFX⁺₋ from their definitions and provides exhaustive
//! allocation-search oracles, so every solver output can be validated by an
//! independent path.

pub mod boolean;
pub mod classify;
pub mod error;
pub mod gen;
pub mod search;
pub mod ssp;
pub mod trilean;
pub mod valuation;
pub mod verify;

pub use classify::{
    canonicalize_trilean, classify_agent, classify_in_regime, detect_kind, AgentClassSet,
    ClassFlag, Regime, TrileanKind, ValueBackMap,
};
pub use error::{FairDivError, Result};
pub use valuation::{
    child_summary, Allocation, ChildSummary, Instance, ItemSet, SetValuation, MAX_ITEMS,
};
