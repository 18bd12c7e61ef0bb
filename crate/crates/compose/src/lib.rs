//! Composition of verified seeded primitives over block sources.
//!
//! Three layers:
//!
//! * [`eval_on_block`] runs one verified primitive on a two-block source
//!   whose second block plays the seed, possibly at a deficit, and carries
//!   the verified guarantee across: a seed `g` below full costs `g` bits
//!   of output floor and a `2^g` blow-up of the error.
//! * [`compose_chain`] chains stages so that each stage's seed is the next
//!   stage's output, turning a row of seeded primitives plus one raw final
//!   block into a single seedless condenser for block sources, with the
//!   gap and error bookkeeping done stage by stage.
//! * [`bucket_schedule`] splits `t` blocks into buckets sized for
//!   recursive chaining: each bucket must be coverable by a seed built
//!   from the next one (`b_i ≤ 2^{b_{i+1}}`), and the last bucket is the
//!   two-block base case.

mod block;
mod chain;
mod schedule;

pub use block::{eval_on_block, BlockEvalOutcome};
pub use chain::{compose_chain, eval_chain_on_block, ChainConfig, ChainEvalOutcome, ComposedChain};
pub use schedule::{bucket_schedule, check_schedule};

use thiserror::Error as ThisError;

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum Error {
    #[error("the primitive carries no verification record")]
    Unverified,
    #[error("source must have exactly two blocks, got {0}")]
    NotTwoBlocks(usize),
    #[error("block {index} has {got} bits, the primitive expects {expected}")]
    BlockWidth {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("first block's floor {floor} is below the verified entropy level {verified}")]
    FloorBelowVerified { floor: f64, verified: usize },
    #[error("input does not verify as a block source (worst margin {margin} at block {index})")]
    NotBlockSource { index: usize, margin: f64 },
    #[error("stage {stage} draws its seed from stage {next}, but d = {d} while m = {m}")]
    SeamMismatch {
        stage: usize,
        next: usize,
        d: usize,
        m: usize,
    },
    #[error("the last stage's seed width {d} must equal the final block's width {n}")]
    LastSeedMismatch { d: usize, n: usize },
    #[error("final block floor {k} is outside [0, {n}]")]
    BadFinalFloor { k: f64, n: usize },
    #[error("final block must be at least one bit wide")]
    EmptyFinalBlock,
    #[error("source lengths {got:?} do not match the chain's blocks {expected:?}")]
    ChainLengths {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("source floor {got} at block {index} is below the chain's requirement {expected}")]
    ChainFloor {
        index: usize,
        expected: f64,
        got: f64,
    },
    #[error("bucket schedules need t ≥ 2, got {0}")]
    ScheduleTooSmall(u64),
    #[error(
        "no bucket schedule exists for t = {0}: one bucket forces t = 2 exactly (the last \
         bucket is pinned at 2), and two buckets already total at least 4"
    )]
    ScheduleInfeasible(u64),
    #[error(transparent)]
    Dist(#[from] bitdist::Error),
    #[error(transparent)]
    Entropy(#[from] entropy::Error),
    #[error(transparent)]
    Blocks(#[from] blocks::Error),
    #[error(transparent)]
    Primitives(#[from] primitives::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
