//! Verification, measurement and repair of block structure.

use bitdist::{statistical_distance, Dist};
use entropy::{distance_to_entropy_class, min_entropy, nearest_with_min_entropy};

use crate::{AlmostBlockParams, BlockDist, Error, Result};

/// Margin slack: a conditional is accepted when its min-entropy is within
/// this much below the floor (pure f64 rounding room).
const MARGIN_TOL: f64 = 1e-9;

/// Rounding guard on the clip-excess comparison in
/// [`measure_almost_params`].
const EXCESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockVerify {
    /// True when every positive-probability prefix leaves the next block
    /// at or above its floor (within [`MARGIN_TOL`]).
    pub holds: bool,
    /// Per block, the worst `H∞(X_i | prefix) − k_i` over prefixes in the
    /// support. A block that is never reached reports `+∞` margin.
    pub margins: Vec<f64>,
}

/// Decides whether `x` is an exact block source for its spec.
pub fn verify_block_source(x: &BlockDist) -> Result<BlockVerify> {
    let spec = x.spec();
    let mut margins = Vec::with_capacity(spec.t());
    for i in 0..spec.t() {
        let marginal = x.prefix_marginal(i)?;
        let mut worst = f64::INFINITY;
        for v in 0..marginal.len() {
            if marginal.prob(v) == 0.0 {
                continue;
            }
            let cond = x
                .conditional_block(i, v)?
                .expect("prefix has positive mass");
            worst = worst.min(min_entropy(&cond) - spec.floors()[i]);
        }
        margins.push(worst);
    }
    let holds = margins.iter().all(|&m| m >= -MARGIN_TOL);
    Ok(BlockVerify { holds, margins })
}

/// Measures how far each block's conditionals stray from their floor:
/// `eta_i` is the mass of prefixes whose conditional has clip-excess
/// distance to the entropy-`k_i` class exceeding `gamma_i`.
pub fn measure_almost_params(x: &BlockDist, gammas: &[f64]) -> Result<AlmostBlockParams> {
    let spec = x.spec();
    check_params(spec.t(), gammas)?;
    let mut etas = Vec::with_capacity(spec.t());
    for i in 0..spec.t() {
        let marginal = x.prefix_marginal(i)?;
        let mut eta = 0.0;
        for v in 0..marginal.len() {
            let pv = marginal.prob(v);
            if pv == 0.0 {
                continue;
            }
            let cond = x
                .conditional_block(i, v)?
                .expect("prefix has positive mass");
            if distance_to_entropy_class(&cond, spec.floors()[i])? > gammas[i] + EXCESS_TOL {
                eta += pv;
            }
        }
        etas.push(eta);
    }
    Ok(AlmostBlockParams {
        etas,
        gammas: gammas.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairResult {
    /// The repaired joint: an exact block source for the same spec.
    pub y: BlockDist,
    /// Measured deviation of the input at the requested `gammas`.
    pub params: AlmostBlockParams,
    /// The certified budget `Σ (eta_i + gamma_i)`.
    pub bound: f64,
    /// Actual statistical distance between input and repair.
    pub distance: f64,
}

/// Repairs an almost-block source into an exact one, certified to move at
/// most `Σ (eta_i + gamma_i)` in statistical distance.
///
/// The repair walks blocks front to back. A conditional within `gamma_i`
/// of its entropy class is replaced by the *nearest* member of the class
/// (cost ≤ gamma_i); one further away — or an off-support prefix — is
/// replaced by the uniform block (cost ≤ 1, charged to `eta_i`). The new
/// joint chains the replacements together, so every conditional meets its
/// floor by construction.
///
/// The budget is sound by a step-wise coupling of the two processes: while
/// the sampled paths agree, the prefix is distributed as under `x`, so the
/// chance of first divergence at block `i` is at most
/// `eta_i + gamma_i` — a bad prefix (mass `eta_i`) or a failed maximal
/// coupling at a good one (≤ `gamma_i`).
pub fn repair_almost_block(x: &BlockDist, gammas: &[f64]) -> Result<RepairResult> {
    let spec = x.spec();
    check_params(spec.t(), gammas)?;
    let params = measure_almost_params(x, gammas)?;

    // cur = repaired joint over the first i blocks.
    let mut cur = vec![1.0];
    for i in 0..spec.t() {
        let n_i = spec.lengths()[i];
        let k_i = spec.floors()[i];
        let mut next = vec![0.0; cur.len() << n_i];
        for (v, &pv) in cur.iter().enumerate() {
            if pv == 0.0 {
                continue;
            }
            let replacement = match x.conditional_block(i, v)? {
                Some(cond) if distance_to_entropy_class(&cond, k_i)? <= gammas[i] + EXCESS_TOL => {
                    nearest_with_min_entropy(&cond, k_i)?
                }
                _ => Dist::uniform(n_i),
            };
            let base = v << n_i;
            for (w, &pw) in replacement.probs().iter().enumerate() {
                next[base | w] = pv * pw;
            }
        }
        cur = next;
    }

    let y = BlockDist::new(spec.clone(), Dist::new(spec.total_bits(), cur)?)?;
    let distance = statistical_distance(x.joint(), y.joint())?;
    Ok(RepairResult {
        bound: params.repair_bound(),
        params,
        distance,
        y,
    })
}

fn check_params(t: usize, gammas: &[f64]) -> Result<()> {
    if gammas.len() != t {
        return Err(Error::ParamCount {
            expected: t,
            got: gammas.len(),
        });
    }
    for (index, &value) in gammas.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::BadParam { index, value });
        }
    }
    Ok(())
}
