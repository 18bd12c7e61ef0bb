//! Gap degradation for block sources with many blocks.
//!
//! Condensing a `t`-block source block by block accumulates entropy gap.
//! The bound evaluated here controls the total: writing `g_i` for block
//! `i`'s gap (length minus floor), `L = 2^ell` for the per-block loss
//! budget and `tau >= 1` for a stability knob, the final gap obeys
//!
//! ```text
//! gap  <=  g_t + e^{6 tau / floor(L)} * (6 tau / floor(L))
//!              * (g_t + log2(1/eps) + C t)  +  C t
//! ```
//!
//! at total loss at most `ell * t + floor((t-2)/tau) * t`, provided every
//! later block carries enough entropy:
//!
//! ```text
//! k_{i+1}  >=  log2(g_i / eps) + ell + floor((t-(i+1)) / tau) + C
//! ```
//!
//! for `i = 1..t-1`, with a caller-supplied constant `C` (never hard-coded
//! on the caller's behalf).  [`multiblock_gap_bound`] evaluates the gap and
//! loss formulas and reports the per-seam requirement margins.  A zero-gap
//! block makes its requirement vacuous (`log2(0)` is minus infinity), and
//! an overwhelmed exponential (`6 tau / floor(L)` in the hundreds)
//! saturates to an infinite — honestly useless — bound rather than being
//! masked.

use crate::{Error, Result};
use blocks::BlockSpec;

/// Tolerance on the per-seam entropy-requirement margins.
pub const REQUIREMENT_TOL: f64 = -1e-9;

/// Evaluated multiblock bound plus its side conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiblockReport {
    /// Bound on the condensed output's entropy gap.
    pub gap_bound: f64,
    /// Bound on the total entropy loss: `ell t + floor((t-2)/tau) t`.
    pub loss_bound: f64,
    /// The damping factor `e^{6 tau / floor(L)} * (6 tau / floor(L))`.
    pub multiplier: f64,
    /// `k_{i+1} - (log2(g_i/eps) + ell + floor((t-(i+1))/tau) + C)` for
    /// each seam `i = 1..t-1`, in order.  Positive infinity when `g_i = 0`.
    pub requirement_margins: Vec<f64>,
    /// All margins at least `-1e-9`.
    pub requirements_hold: bool,
}

/// Evaluates the multiblock gap bound for `blocks` at per-block loss
/// `ell >= 0`, stability `tau >= 1`, smoothing `eps` in `(0, 1]` and
/// caller-supplied constant `C >= 0`.
pub fn multiblock_gap_bound(
    blocks: &BlockSpec,
    ell: f64,
    tau: f64,
    eps: f64,
    c: f64,
) -> Result<MultiblockReport> {
    if !eps.is_finite() || eps <= 0.0 || eps > 1.0 {
        return Err(Error::BadEps(eps));
    }
    if !ell.is_finite() || ell < 0.0 {
        return Err(Error::BadEll(ell));
    }
    if !tau.is_finite() || tau < 1.0 {
        return Err(Error::BadTau(tau));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::BadConstant(c));
    }
    let t = blocks.t();
    if t < 2 {
        return Err(Error::TooFewBlocks(t));
    }

    let gaps: Vec<f64> = blocks
        .lengths()
        .iter()
        .zip(blocks.floors())
        .map(|(&n, &k)| n as f64 - k)
        .collect();
    let g_last = gaps[t - 1];
    let tf = t as f64;
    let ct = c * tf;

    let l_floor = ell.exp2().floor();
    let arg = 6.0 * tau / l_floor;
    let multiplier = arg.exp() * arg;
    let gap_bound = g_last + multiplier * (g_last + (1.0 / eps).log2() + ct) + ct;
    let loss_bound = ell * tf + ((tf - 2.0) / tau).floor() * tf;

    let requirement_margins: Vec<f64> = (1..t)
        .map(|i| {
            let need = (gaps[i - 1] / eps).log2()
                + ell
                + ((tf - (i + 1) as f64) / tau).floor()
                + c;
            blocks.floors()[i] - need
        })
        .collect();
    let requirements_hold = requirement_margins.iter().all(|&m| m >= REQUIREMENT_TOL);

    Ok(MultiblockReport {
        gap_bound,
        loss_bound,
        multiplier,
        requirement_margins,
        requirements_hold,
    })
}
