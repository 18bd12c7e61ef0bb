//! Block sources: joint distributions whose blocks promise conditional
//! min-entropy floors, plus the lemmas that move between exact, almost,
//! and tampered block structure.
//!
//! A *block source* over lengths `(n₁, …, n_t)` with floors `(k₁, …, k_t)`
//! is a joint distribution where, for every prefix of realized blocks, the
//! next block still has min-entropy at least its floor:
//! `H∞(X_i | X_{<i} = v) ≥ k_i` for every positive-probability `v`.
//! Floors are real-valued; every criterion in this crate is expressed
//! through exact conditional min-entropy or the clip-excess distance to
//! the entropy-`k` class, both of which are well-defined for fractional
//! floors — nothing here rounds.
//!
//! The operations come in two flavors:
//!
//! * *verifiers* decide whether a given joint has the promised structure
//!   and report exact margins ([`verify_block_source`],
//!   [`measure_almost_params`], [`local_to_global_check`],
//!   [`chain_rule_check`], [`fixing_lemma_check`]);
//! * *constructors* produce certified-close repairs
//!   ([`repair_almost_block`]) and synthetic instances ([`generate`]).

mod fixing;
pub mod generate;
mod lemmas;
mod types;
mod verify;

pub use fixing::{fixing_lemma_check, FixingReport};
pub use lemmas::{chain_rule_check, local_to_global_check, ChainRuleReport, LocalGlobalReport};
pub use types::{AlmostBlockParams, BlockDist, BlockSpec};
pub use verify::{
    measure_almost_params, repair_almost_block, verify_block_source, BlockVerify, RepairResult,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a block spec needs at least one block")]
    EmptySpec,
    #[error("spec has {lengths} lengths but {floors} floors")]
    FloorCount { lengths: usize, floors: usize },
    #[error("floor {k} for block {index} is outside [0, {n_bits}]")]
    FloorOutOfRange { index: usize, k: f64, n_bits: usize },
    #[error("joint distribution has {got} bits, spec totals {expected}")]
    JointWidth { expected: usize, got: usize },
    #[error("expected {expected} per-block parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("per-block parameter {index} is {value}, must be finite and ≥ 0")]
    BadParam { index: usize, value: f64 },
    #[error("block lengths differ: {0:?} vs {1:?}")]
    LengthsMismatch(Vec<usize>, Vec<usize>),
    #[error("operation requires exactly two blocks, spec has {0}")]
    NotTwoBlocks(usize),
    #[error("eps must lie in (0, 1], got {0}")]
    BadEps(f64),
    #[error("tampered side must have {expected} blocks, got {got}")]
    TamperBlockCount { expected: usize, got: usize },
    #[error("joint over (source, tampered) has {got} bits, expected {expected}")]
    TamperJointWidth { expected: usize, got: usize },
    #[error(
        "joint's source marginal is {distance} away from the given block source (tolerance 1e-9)"
    )]
    MarginalMismatch { distance: f64 },
    #[error("the given source is not a block source (margin {margin} at block {index})")]
    SourceNotBlock { index: usize, margin: f64 },
    #[error(
        "tampering is not admissible: conditioned on (source prefix {prefix}, tampered suffix \
         {suffix}), block {block} and the earlier tampered blocks fail to factorize \
         (distance {distance})"
    )]
    NotAdmissible {
        block: usize,
        prefix: usize,
        suffix: usize,
        distance: f64,
    },
    #[error(transparent)]
    Dist(#[from] bitdist::Error),
    #[error(transparent)]
    Entropy(#[from] entropy::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
