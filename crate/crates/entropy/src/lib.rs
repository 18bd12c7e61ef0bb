//! Exact and smooth min-entropy for small distributions.
//!
//! Min-entropy is `H∞(X) = −log₂ max_u Pr[X = u]`. The smooth variant
//! `H^ε(X)` asks for the best min-entropy achievable by any distribution
//! within statistical distance ε of `X`. On dense small distributions this
//! optimum has a closed form driven by the *clip excess*
//!
//! ```text
//! E(c) = Σ_u max(Pr[X = u] − c, 0),
//! ```
//!
//! the mass that must be shaved off to bring every outcome down to
//! probability `c`: `H^ε(X) ≥ k` holds exactly when `E(2^{−k}) ≤ ε`
//! (for `0 ≤ k ≤ n_bits`). [`smooth_min_entropy`] finds the optimal
//! clipping level by walking the piecewise-linear `E`, and returns an
//! explicit witness distribution achieving the optimum together with the
//! size of the heavy set at the achieved level.
//!
//! The [`oracle`] module carries deliberately naive reference
//! implementations (grid searches) used by the test suites to cross-check
//! the closed forms; it is compiled into the library so integration tests
//! in downstream crates can call it too.

mod character;
pub mod oracle;
mod smooth;
mod smoothing;

pub use character::{
    check_characterization, heavy_set, set_mass_bound_holds, CharacterizationReport,
};
pub use smooth::{clip_excess, nearest_with_min_entropy, smooth_min_entropy, SmoothEntropyResult};
pub use smoothing::{closeness_smoothing_check, SmoothingClaimReport};

use bitdist::Dist;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("smoothing parameter must be a finite value ≥ 0, got {0}")]
    BadEps(f64),
    #[error("entropy threshold {k} is outside [0, {n_bits}]")]
    BadThreshold { k: f64, n_bits: usize },
    #[error("closeness parameter gamma must be > 0, got {0}")]
    BadGamma(f64),
    #[error("set contains outcome {value}, which does not fit in {n_bits} bits")]
    SetOutOfRange { value: usize, n_bits: usize },
    #[error("prefix of {a_bits} bits requested from a {n_bits}-bit joint")]
    BadSplit { a_bits: usize, n_bits: usize },
    #[error(transparent)]
    Dist(#[from] bitdist::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Exact min-entropy, `−log₂ max_u Pr[X = u]`.
pub fn min_entropy(x: &Dist) -> f64 {
    -x.max_prob().log2()
}

/// Entropy gap `n_bits − H∞(X)`, clamped at zero against rounding.
pub fn entropy_gap(x: &Dist) -> f64 {
    (x.n_bits() as f64 - min_entropy(x)).max(0.0)
}

/// The unconditional smoothing floor `c_ε = log₂(1/(1−ε))`: every
/// distribution on `n` bits satisfies `H^ε ≥ min(n, c_ε)`, because
/// clipping at level `1 − ε` removes at most ε of mass. Requires
/// `0 ≤ ε < 1`.
pub fn c_eps(eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::BadEps(eps));
    }
    Ok(-(1.0 - eps).log2())
}

/// Statistical distance from `q` to the class of distributions with
/// min-entropy at least `k` (on `q`'s bit width). Equals the clip excess
/// `E_q(2^{−k})`: any `W` with `max W ≤ 2^{−k}` must absorb at least that
/// much mass from the heavy outcomes, and clipping + redistribution
/// achieves it. Requires `0 ≤ k ≤ n_bits` so that the class is non-empty.
pub fn distance_to_entropy_class(q: &Dist, k: f64) -> Result<f64> {
    if !k.is_finite() || k < -1e-9 || k > q.n_bits() as f64 + 1e-9 {
        return Err(Error::BadThreshold {
            k,
            n_bits: q.n_bits(),
        });
    }
    Ok(clip_excess(q, (-k).exp2()))
}
