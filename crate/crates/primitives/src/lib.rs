//! Seeded extractors and condensers at enumerable scale, with honest
//! verification.
//!
//! A seeded primitive is a function `f: {0,1}^n × {0,1}^d → {0,1}^m`
//! carrying a parameter sheet: at input min-entropy `k` it promises output
//! smooth min-entropy `k′ = k − loss` within error `eps`, where
//! `m = k′ + gap`. An extractor is the special case `k′ = m` (gap 0
//! relative to the output length).
//!
//! Because everything here is small enough to enumerate, claims are
//! *measured*, not assumed: [`verify_seeded_extractor`] and
//! [`verify_seeded_condenser`] compute the exact worst-case error over all
//! flat `k`-sources — which bounds all `k`-sources, flat or not, since the
//! error functional is convex and flats are the extreme points — either
//! exhaustively over every output set (Gray-code enumeration) or against a
//! deterministic family of sets that yields a certified lower bound.
//! [`search_primitive`] and [`search_function`] find tables satisfying a
//! target by seeded random (or exhaustive) search.

mod build;
mod search;
mod types;
mod verify;

pub use build::{identity_on_seed, ip_extractor, xor_extractor};
pub use search::{search_family_condenser, search_function, search_primitive, SearchBudget};
pub use types::{CondenserParams, SeededPrimitive, VerificationRecord, VerifyMethod};
pub use verify::{verify_seeded_condenser, verify_seeded_extractor};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bit width {0} exceeds the enumerable maximum {1}")]
    WidthTooLarge(usize, usize),
    #[error("entropy level k={k} must lie in [0, {n}]")]
    BadK { k: f64, n: usize },
    #[error("entropy level k={0} must be an integer to enumerate flat sources")]
    NonIntegralK(f64),
    #[error("output floor k'={k_prime} must lie in [0, {m}]")]
    BadKPrime { k_prime: f64, m: usize },
    #[error("error bound eps={0} must lie in [0, 1]")]
    BadEps(f64),
    #[error("zero-error builders sheet as extractors and need k ≥ output width: k={k}, m={m}")]
    KBelowOutput { k: usize, m: usize },
    #[error("loss {0} must be finite and ≥ 0")]
    BadLoss(f64),
    #[error("parameters are inconsistent: m={m} but k − loss + gap = {implied}")]
    InconsistentParams { m: usize, implied: f64 },
    #[error("gap m − (k − loss) = {0} is negative")]
    NegativeGap(f64),
    #[error("table shape {got_in}→{got_out} does not match declared {want_in}→{want_out}")]
    TableShape {
        want_in: usize,
        want_out: usize,
        got_in: usize,
        got_out: usize,
    },
    #[error("exhaustive set enumeration needs 2^m ≤ 16 output values, got m={0}")]
    ExhaustiveTooWide(usize),
    #[error("exhaustive table enumeration needs (2^m)^(2^n) ≤ 2^24, got {0} bits of table space")]
    TableSpaceTooLarge(u32),
    #[error("family distribution {index} has {got} bits, expected {expected}")]
    FamilyWidth {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("family must be non-empty")]
    EmptyFamily,
    #[error(transparent)]
    Dist(#[from] bitdist::Error),
    #[error(transparent)]
    Entropy(#[from] entropy::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
