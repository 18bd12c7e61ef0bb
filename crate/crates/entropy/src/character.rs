//! The set-mass characterization of smooth min-entropy.
//!
//! `H^ε(X) ≥ k` holds iff every outcome set `S` obeys
//! `Pr[X ∈ S] ≤ |S|·2^{−k} + ε`; and when it fails, the *heavy set*
//! `{u : Pr[X = u] > 2^{−k}}` is always a violating set (its excess over
//! `|H|·2^{−k}` is exactly the clip excess). [`check_characterization`]
//! exercises both directions against caller-supplied candidate sets.

use bitdist::Dist;

use crate::{clip_excess, Error, Result};

/// Slack applied to the per-set comparison to absorb f64 rounding.
const SET_TOL: f64 = 1e-9;

/// Outcomes with probability strictly above `2^{−k}`.
pub fn heavy_set(x: &Dist, k: f64) -> Vec<usize> {
    let level = (-k).exp2();
    x.probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > level)
        .map(|(u, _)| u)
        .collect()
}

/// Whether `Pr[X ∈ S] ≤ |S|·2^{−k} + ε` (with rounding slack). Duplicate
/// indices in `set` are collapsed first so the cardinality is honest.
pub fn set_mass_bound_holds(x: &Dist, k: f64, eps: f64, set: &[usize]) -> Result<bool> {
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    if let Some(&value) = set.iter().find(|&&u| u >= x.len()) {
        return Err(Error::SetOutOfRange {
            value,
            n_bits: x.n_bits(),
        });
    }
    let mass = x.mass_of(&set);
    Ok(mass <= set.len() as f64 * (-k).exp2() + eps + SET_TOL)
}

/// Outcome of cross-checking the closed-form verdict against explicit
/// sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport {
    /// Closed-form verdict: `E(2^{−k}) ≤ ε`, i.e. `H^ε(X) ≥ k`.
    pub formula_holds: bool,
    /// `E(2^{−k}) − ε`; positive exactly when the formula fails.
    pub excess: f64,
    pub sets_checked: usize,
    /// How many supplied sets violated the mass bound.
    pub failing_sets: usize,
    pub heavy_set_size: usize,
    /// Whether the heavy set itself violates the mass bound.
    pub heavy_set_violates: bool,
    /// Agreement between the two views: a passing formula must see every
    /// set pass, and a failing formula must be witnessed by the heavy set.
    pub consistent: bool,
}

/// Tests the characterization at threshold `k` (must lie in `[0, n_bits]`)
/// and smoothing `eps ≥ 0` against the supplied candidate sets.
pub fn check_characterization(
    x: &Dist,
    k: f64,
    eps: f64,
    sets: &[Vec<usize>],
) -> Result<CharacterizationReport> {
    if !k.is_finite() || k < -1e-9 || k > x.n_bits() as f64 + 1e-9 {
        return Err(Error::BadThreshold {
            k,
            n_bits: x.n_bits(),
        });
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::BadEps(eps));
    }

    let excess = clip_excess(x, (-k).exp2()) - eps;
    let formula_holds = excess <= 0.0;

    let mut failing_sets = 0;
    for set in sets {
        if !set_mass_bound_holds(x, k, eps, set)? {
            failing_sets += 1;
        }
    }

    let heavy = heavy_set(x, k);
    let heavy_set_violates = !set_mass_bound_holds(x, k, eps, &heavy)?;

    let consistent = if formula_holds {
        failing_sets == 0
    } else {
        heavy_set_violates
    };

    Ok(CharacterizationReport {
        formula_holds,
        excess,
        sets_checked: sets.len(),
        failing_sets,
        heavy_set_size: heavy.len(),
        heavy_set_violates,
        consistent,
    })
}
