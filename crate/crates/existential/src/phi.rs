//! Numeric verification of the analytic inequalities behind the tail bounds.
//!
//! Three inequality families do the real work inside the random-function
//! proofs, and all three are pure calculus claims that a dense grid can
//! check to machine precision:
//!
//! * **Chernoff floor** — `phi(alpha, g) := (1+alpha)(ln G + ln(1+1/alpha) - 1)
//!   + alpha/G` stays at or above `g ln 2` for every `alpha > 0, g >= 0`.
//!   This is the optimized Chernoff exponent that turns a union bound over
//!   superlevel sets into the part-one tail.
//! * **Ratio sandwich** — with `phi(g) := (ln G - 1 + 1/G) * log2(e)`,
//!   the ratio `g/phi` is pinched between `2/(g ln 2)` and `2G/(g ln 2)`,
//!   equivalently `g^2 ln(2) / (2G) <= phi <= g^2 ln(2) / 2`.
//! * **Unit window** — the same `phi(g)` satisfies
//!   `g - log2(e) <= phi <= g`, so it trails `g` by less than a bit and a
//!   half; at `g = 0` it closes to `phi = 0 = g` exactly.
//!
//! [`phi_checks`] sweeps all three over caller-sized grids
//! (`g` in `(0, 20]`, `alpha` in `(0, 1000]`) and reports the worst margin
//! per family; a margin below `-1e-9` is a violation.  [`chernoff_value`]
//! exposes the multiplicative Chernoff tail `(e^delta / (1+delta)^(1+delta))^mu`
//! itself, evaluated in log domain.

use crate::{Error, Result};
use std::f64::consts::{LN_2, LOG2_E};

/// Margin tolerance: a family holds when its worst margin is above this.
pub const MARGIN_TOL: f64 = -1e-9;

/// The two-parameter Chernoff exponent
/// `(1+alpha)(ln G + ln(1+1/alpha) - 1) + alpha/G`, in nats.
pub fn phi_alpha(alpha: f64, g: f64) -> f64 {
    let ln_cap_g = g * LN_2;
    (1.0 + alpha) * (ln_cap_g + (1.0 + 1.0 / alpha).ln() - 1.0) + alpha / g.exp2()
}

/// The one-parameter exponent `(ln G - 1 + 1/G) * log2(e)`, in bits.
///
/// Algebraically this equals `g - (1 - 2^{-g}) * log2(e)`, which is the
/// form evaluated here (it is exact at `g = 0` and avoids cancellation for
/// small `g`).
pub fn phi_in_bits(g: f64) -> f64 {
    g - (1.0 - (-g).exp2()) * LOG2_E
}

/// Worst case seen by one inequality family over its grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyReport {
    /// Grid points evaluated.
    pub points: usize,
    /// Smallest margin; the inequality holds at a point when its margin is
    /// nonnegative (two-sided families take the smaller side).
    pub worst_margin: f64,
    /// `worst_margin >= -1e-9`.
    pub holds: bool,
}

/// Grid verdicts for the three families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiReport {
    /// `phi(alpha, g) >= g ln 2` over the `(g, alpha)` product grid.
    pub chernoff_floor: FamilyReport,
    /// `2/(g ln 2) <= g/phi <= 2G/(g ln 2)` over the `g` grid.
    pub ratio_sandwich: FamilyReport,
    /// `g - log2(e) <= phi <= g` over the `g` grid.
    pub unit_window: FamilyReport,
    /// All three families hold.
    pub holds: bool,
}

fn family(points: usize, worst_margin: f64) -> FamilyReport {
    FamilyReport {
        points,
        worst_margin,
        holds: worst_margin >= MARGIN_TOL,
    }
}

/// Sweeps the three inequality families over evenly spaced grids:
/// `g_j = 20 j / g_points` for `j = 1..=g_points` and
/// `alpha_i = 1000 i / alpha_points` for `i = 1..=alpha_points` (so the
/// endpoint `alpha = 1000` is always included).  The Chernoff floor is
/// checked on the product grid; the two single-parameter families on the
/// `g` grid.
pub fn phi_checks(g_points: usize, alpha_points: usize) -> Result<PhiReport> {
    if g_points == 0 || alpha_points == 0 {
        return Err(Error::EmptyGrid);
    }

    let mut floor_worst = f64::INFINITY;
    let mut sandwich_worst = f64::INFINITY;
    let mut window_worst = f64::INFINITY;

    for j in 1..=g_points {
        let g = 20.0 * j as f64 / g_points as f64;
        for i in 1..=alpha_points {
            let alpha = 1000.0 * i as f64 / alpha_points as f64;
            floor_worst = floor_worst.min(phi_alpha(alpha, g) - g * LN_2);
        }

        let phi = phi_in_bits(g);
        let ratio = g / phi;
        let lo = 2.0 / (g * LN_2);
        let hi = 2.0 * g.exp2() / (g * LN_2);
        sandwich_worst = sandwich_worst.min((ratio - lo).min(hi - ratio));

        window_worst = window_worst.min((phi - (g - LOG2_E)).min(g - phi));
    }

    let chernoff_floor = family(g_points * alpha_points, floor_worst);
    let ratio_sandwich = family(g_points, sandwich_worst);
    let unit_window = family(g_points, window_worst);
    let holds = chernoff_floor.holds && ratio_sandwich.holds && unit_window.holds;
    Ok(PhiReport {
        chernoff_floor,
        ratio_sandwich,
        unit_window,
        holds,
    })
}

/// Multiplicative Chernoff tail value `(e^delta / (1+delta)^(1+delta))^mu`,
/// bounding `Pr[X >= (1+delta) mu]` for a sum `X` of independent `[0,1]`
/// variables with `E[X] <= mu`.
///
/// Computed as `exp(mu * (delta - (1+delta) ln(1+delta)))`; `ln_1p` keeps
/// the exponent accurate as `delta -> 0+`, where the value tends to one.
pub fn chernoff_value(mu: f64, delta: f64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::BadMu(mu));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::BadDelta(delta));
    }
    Ok((mu * (delta - (1.0 + delta) * delta.ln_1p())).exp())
}
