//! Monte-Carlo verification of existential condenser bounds.
//!
//! A uniformly random function `f : {0,1}^n -> {0,1}^m` is, with high
//! probability, a condenser for every fixed source of min-entropy `k`: the
//! output retains smooth min-entropy at least `k - l` (losing `l` bits)
//! whenever the output length budget leaves a gap `g = m - (k - l) > 0`.
//! This crate makes that claim testable at desk scale:
//!
//! * [`bounds`] evaluates the explicit failure-probability bounds — the tail
//!   exponent `psi` and the two concrete tail estimates [`part1_bound`] and
//!   [`part2_bound`] — exactly as stated, with no hidden constants.
//! * [`phi`] checks the analytic inequalities those proofs lean on
//!   (the `phi(alpha, g)` lower bound and the `phi(g)` sandwich) over dense
//!   numeric grids, and exposes the multiplicative Chernoff tail value.
//! * [`mc`] samples random functions, measures the empirical failure rate of
//!   the smooth min-entropy guarantee, and compares it against the claimed
//!   bound with an exact binomial test.
//! * [`multiblock`] evaluates the block-source gap-degradation bound and its
//!   per-block entropy requirements.
//!
//! Conventions: lower-case parameters are bit quantities, and the
//! corresponding capital is its exponential (`K = 2^k`, `L = 2^l`,
//! `G = 2^g`). Probabilities returned by bound evaluators are clamped to
//! `[0, 1]`; a clamped-to-one bound is reported as vacuous rather than
//! hidden.

pub mod bounds;
pub mod mc;
pub mod multiblock;
pub mod phi;

pub use bounds::{
    part1_bound, part2_bound, psi, BoundInputs, Part1Bound, Part2Bound, PsiBranch, PsiValue,
};
pub use mc::{mc_failure_rate, McReport};
pub use multiblock::{multiblock_gap_bound, MultiblockReport};
pub use phi::{chernoff_value, phi_checks, FamilyReport, PhiReport};

/// Errors for bound evaluation and Monte-Carlo verification.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Error parameter outside `(0, 1]`.
    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEps(f64),
    /// Entropy parameter `k` is negative or not finite.
    #[error("entropy parameter k must be finite and nonnegative, got {0}")]
    BadK(f64),
    /// Loss parameter must be finite and nonnegative (it may exceed `k`;
    /// the bounds only weaken).
    #[error("loss l must be finite and nonnegative, got {0}")]
    BadEll(f64),
    /// Gap parameter must be strictly positive.
    #[error("gap g must be finite and strictly positive, got {0}")]
    BadG(f64),
    /// Caller-supplied constant must be finite and nonnegative.
    #[error("constant C must be finite and nonnegative, got {0}")]
    BadConstant(f64),
    /// Stability parameter for the multiblock bound must be at least one.
    #[error("tau must be finite and at least 1, got {0}")]
    BadTau(f64),
    /// Chernoff mean must be finite and nonnegative.
    #[error("mean mu must be finite and nonnegative, got {0}")]
    BadMu(f64),
    /// Chernoff deviation must be finite and strictly positive.
    #[error("deviation delta must be finite and strictly positive, got {0}")]
    BadDelta(f64),
    /// Grid resolution must be positive.
    #[error("grid must contain at least one point per axis")]
    EmptyGrid,
    /// Monte-Carlo runs need at least one trial.
    #[error("trial count must be positive")]
    NoTrials,
    /// Exhaustive image distributions cap the output width.
    #[error("output width {0} exceeds the supported 16 bits")]
    OutputTooWide(usize),
    /// Random-function trials are seedless; the parameter sheet must agree.
    #[error("parameter sheet declares a {0}-bit seed; random-function trials are seedless (d = 0)")]
    NotSeedless(usize),
    /// The sampled source and the parameter sheet disagree on input width.
    #[error("source has {got} bits but the parameter sheet expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    /// The source fails the min-entropy floor claimed by the parameter sheet.
    #[error("source min-entropy {have} is below the required floor {need}")]
    EntropyFloor { have: f64, need: f64 },
    /// The multiblock bound needs at least two blocks.
    #[error("multiblock bound needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error(transparent)]
    Dist(#[from] bitdist::Error),
    #[error(transparent)]
    Entropy(#[from] entropy::Error),
}

/// Crate-local result alias.
pub type Result<T> = std::result::Result<T, Error>;
