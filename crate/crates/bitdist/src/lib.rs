//! Dense probability distributions over fixed-length bit strings.
//!
//! A [`Dist`] stores the full probability vector of a random variable on
//! `n_bits` bits: entry `u` is `Pr[X = u]` for `u ∈ {0, …, 2^n − 1}`.
//! Strings are read MSB-first, so the first `p` coordinates of an outcome
//! `u` are `u >> (n_bits − p)`. That convention is what makes
//! [`Dist::prefix`] and [`product`] inverse to each other on the first
//! factor, and it is relied on throughout the higher-level crates.
//!
//! Everything here is exact linear algebra on the dense vector — no
//! sampling, no approximation beyond f64 arithmetic. Distributions are
//! validated on construction (non-negative entries, total mass within
//! [`MASS_TOL`] of one) and every operation that renormalizes does so by
//! dividing by the freshly computed mass, so downstream consumers can rely
//! on masses staying put.
//!
//! [`FunctionTable`] is the companion type: an exhaustive truth table for a
//! function `{0,1}^in → {0,1}^out`, used to push distributions forward.

mod dist;
mod table;

pub use dist::{condition, mix, product, push_forward, statistical_distance, Dist};
pub use table::FunctionTable;

use thiserror::Error;

/// Tolerance on total probability mass at construction time.
pub const MASS_TOL: f64 = 1e-9;

/// Largest supported bit width for a single distribution (the dense vector
/// has `2^n` entries, so this caps memory at ~128 MiB of f64).
pub const MAX_BITS: usize = 24;

/// Errors produced by distribution and table constructors and operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bit width {0} exceeds the supported maximum of {MAX_BITS}")]
    WidthTooLarge(usize),
    #[error("probability vector has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("probability at index {index} is negative ({value})")]
    NegativeProb { index: usize, value: f64 },
    #[error("total probability mass {total} is not within {MASS_TOL} of 1")]
    BadMass { total: f64 },
    #[error("bit widths differ: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("outcome {value} does not fit in {bits} bits")]
    OutcomeOutOfRange { value: usize, bits: usize },
    #[error("event indicator has {got} entries, expected {expected}")]
    BadEvent { expected: usize, got: usize },
    #[error("conditioning on an event of probability zero")]
    ZeroEvent,
    #[error("mixture weights sum to {total}, not within {MASS_TOL} of 1")]
    BadWeights { total: f64 },
    #[error("mixture weight at index {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("cannot mix an empty list of components")]
    EmptyMix,
    #[error("prefix of {prefix} bits requested from a {n_bits}-bit distribution")]
    PrefixTooWide { prefix: usize, n_bits: usize },
    #[error("table entry {value} at input {index} does not fit in {out_bits} output bits")]
    TableEntryOutOfRange {
        index: usize,
        value: usize,
        out_bits: usize,
    },
    #[error("function table has {got} entries, expected {expected}")]
    TableWrongLength { expected: usize, got: usize },
    #[error("input {value} does not fit in {in_bits} input bits")]
    InputOutOfRange { value: usize, in_bits: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
