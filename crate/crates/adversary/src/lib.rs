//! Constructive impossibility: for any fixed seedless map, build a source
//! with the promised entropy whose image provably fails to condense.
//!
//! Two attacks. [`break_general`] serves a flat `(n−g)`-source to an
//! arbitrary `f : {0,1}^n → {0,1}^m`; [`break_cg`] serves a block source
//! with per-block floors `n−g` to an `f` over `t` blocks. Both steer the
//! whole source into one `g'`-bit output prefix (`g' = min(g, m)`), which
//! pins the image's support size and hence its smooth min-entropy.

mod attack;

pub use attack::{break_cg, break_general, CgBreak, GeneralBreak};

use thiserror::Error as ThisError;

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum Error {
    #[error("eps must lie in [0, 1), got {0}")]
    BadEps(f64),
    #[error("deficiency g = {g} exceeds the source width {n}")]
    GTooLarge { g: usize, n: usize },
    #[error("need at least one block")]
    NoBlocks,
    #[error("table takes {got} bits, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("table width {bits} is not divisible into {t} equal blocks")]
    UnevenBlocks { bits: usize, t: usize },
    #[error("joint attack over {0} bits is beyond the supported 16")]
    JointTooWide(usize),
    #[error(transparent)]
    Dist(#[from] bitdist::Error),
    #[error(transparent)]
    Entropy(#[from] entropy::Error),
    #[error(transparent)]
    Blocks(#[from] blocks::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
