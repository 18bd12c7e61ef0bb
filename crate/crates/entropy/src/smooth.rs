//! Closed-form smooth min-entropy with explicit witnesses.

use bitdist::Dist;

use crate::{Error, Result};

/// Clip excess `E(c) = Σ_u max(Pr[X = u] − c, 0)`: the probability mass
/// sitting above level `c`. Continuous, convex, and strictly decreasing in
/// `c` wherever it is positive.
pub fn clip_excess(x: &Dist, c: f64) -> f64 {
    x.probs().iter().map(|&p| (p - c).max(0.0)).sum()
}

/// Result of a smooth min-entropy computation.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEntropyResult {
    /// `H^ε(X)`, capped at `n_bits` (entropy on `n` bits cannot exceed `n`).
    pub value: f64,
    /// A distribution within statistical distance ε of the input whose
    /// min-entropy is (up to rounding) `value` — the optimum is attained.
    pub witness: Dist,
    /// Number of outcomes with probability strictly above `2^{−value}`.
    pub heavy_set_size: usize,
    /// True when the unconstrained optimum exceeded `n_bits` and was
    /// clamped (equivalently, ε is large enough to reach uniform-or-better
    /// levels). Also set when `ε ≥ 1`.
    pub capped: bool,
}

/// Smooth min-entropy `H^ε(X)`: the largest `k ≤ n_bits` such that some
/// distribution ε-close to `X` has min-entropy `k`. Computed exactly by
/// locating the smallest clipping level `c*` with `E(c*) ≤ ε` on the
/// piecewise-linear clip-excess curve; then `H^ε(X) = min(n, −log₂ c*)`.
///
/// For `ε ≥ 1` every distribution is in range, so the value is `n_bits`
/// with a uniform witness.
pub fn smooth_min_entropy(x: &Dist, eps: f64) -> Result<SmoothEntropyResult> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::BadEps(eps));
    }
    let n_bits = x.n_bits();

    let c_star = if eps >= 1.0 { None } else { crossing_level(x, eps) };

    let (value, capped) = match c_star {
        None => (n_bits as f64, true),
        Some(c) => {
            let raw = -c.log2();
            if raw > n_bits as f64 + 1e-12 {
                (n_bits as f64, true)
            } else {
                (raw.min(n_bits as f64), false)
            }
        }
    };

    // Build the witness at the achieved level. 2^{−value} ≥ c*, so its clip
    // excess is still ≤ ε, and the level is ≥ 2^{−n}, so the 2^n outcomes
    // have room for the full unit of mass.
    let level = (-value).exp2();
    let witness = witness_at_level(x, level);
    let heavy_set_size = x.probs().iter().filter(|&&p| p > level).count();

    Ok(SmoothEntropyResult {
        value,
        witness,
        heavy_set_size,
        capped,
    })
}

/// Smallest `c` with `E(c) ≤ ε`, or `None` when every `c ≥ 0` qualifies
/// (which, at total mass ~1, means `ε ≥ 1` up to the mass tolerance).
///
/// With the support sorted descending as `p₍₁₎ ≥ … ≥ p₍N₎`, on the
/// interval `[p₍ⱼ₊₁₎, p₍ⱼ₎]` the excess is the line `E(c) = Sⱼ − j·c`
/// (`Sⱼ` the top-`j` partial sum), so the crossing solves in closed form.
fn crossing_level(x: &Dist, eps: f64) -> Option<f64> {
    let mut support: Vec<f64> = x.probs().iter().copied().filter(|&p| p > 0.0).collect();
    support.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut partial = 0.0;
    for (i, &p) in support.iter().enumerate() {
        partial += p;
        let j = (i + 1) as f64;
        let lower = support.get(i + 1).copied().unwrap_or(0.0);
        // Excess at the interval's lower endpoint.
        if partial - j * lower > eps {
            let c = (partial - eps) / j;
            // Clamp into the interval against rounding.
            return Some(c.max(lower).min(p));
        }
    }
    None
}

/// The closest distribution (in statistical distance) to `x` among those
/// with min-entropy at least `k` — the minimizer behind
/// [`crate::distance_to_entropy_class`]. Requires `0 ≤ k ≤ n_bits` so the
/// class is non-empty.
pub fn nearest_with_min_entropy(x: &Dist, k: f64) -> Result<Dist> {
    if !k.is_finite() || k < -1e-9 || k > x.n_bits() as f64 + 1e-9 {
        return Err(Error::BadThreshold {
            k,
            n_bits: x.n_bits(),
        });
    }
    Ok(witness_at_level(x, (-k.max(0.0)).exp2()))
}

/// Clips every entry to `level` and refills the removed excess into
/// entries with room (lowest index first), then renormalizes exactly.
/// Requires `level ≥ 2^{−n}` so that total capacity covers the mass.
fn witness_at_level(x: &Dist, level: f64) -> Dist {
    let mut probs: Vec<f64> = x.probs().iter().map(|&p| p.min(level)).collect();
    let mut excess: f64 = x
        .probs()
        .iter()
        .zip(&probs)
        .map(|(&orig, &clipped)| orig - clipped)
        .sum();
    for slot in probs.iter_mut() {
        if excess <= 0.0 {
            break;
        }
        let take = (level - *slot).min(excess);
        if take > 0.0 {
            *slot += take;
            excess -= take;
        }
    }
    debug_assert!(excess <= 1e-9, "witness refill left {excess} unplaced");
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Dist::new(x.n_bits(), probs).expect("witness construction preserves mass")
}
