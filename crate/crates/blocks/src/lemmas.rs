//! Local-to-global closeness and the min-entropy chain rule.

use bitdist::{condition, statistical_distance};
use entropy::min_entropy;

use crate::{BlockDist, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalGlobalReport {
    /// Per block, the worst conditional distance over prefixes in the
    /// *shared* support of the two joints.
    pub eps: Vec<f64>,
    /// Statistical distance between the two joints.
    pub distance: f64,
    /// `Σ eps_i`.
    pub bound: f64,
    /// `distance ≤ bound + 1e-9`.
    pub holds: bool,
}

/// Checks that block-wise conditional closeness controls joint closeness:
/// with `eps_i = max over shared-support prefixes v` of
/// `sd(X_i | v, Y_i | v)`, the joints satisfy `sd(X, Y) ≤ Σ eps_i`.
///
/// Only the block *lengths* enter the statement, so the two specs must
/// agree on lengths; floors are not consulted. Prefixes reachable by one
/// side but not the other never host a comparison — a step-wise maximal
/// coupling of the two processes only ever conditions on prefixes both
/// sides have realized, which is why the bound is sound with the maxima
/// taken over the shared support.
pub fn local_to_global_check(x: &BlockDist, y: &BlockDist) -> Result<LocalGlobalReport> {
    if x.spec().lengths() != y.spec().lengths() {
        return Err(Error::LengthsMismatch(
            x.spec().lengths().to_vec(),
            y.spec().lengths().to_vec(),
        ));
    }
    let t = x.spec().t();
    let mut eps = Vec::with_capacity(t);
    for i in 0..t {
        let mx = x.prefix_marginal(i)?;
        let my = y.prefix_marginal(i)?;
        let mut worst = 0.0f64;
        for v in 0..mx.len() {
            if mx.prob(v) == 0.0 || my.prob(v) == 0.0 {
                continue;
            }
            let cx = x.conditional_block(i, v)?.expect("positive mass");
            let cy = y.conditional_block(i, v)?.expect("positive mass");
            worst = worst.max(statistical_distance(&cx, &cy)?);
        }
        eps.push(worst);
    }
    let distance = statistical_distance(x.joint(), y.joint())?;
    let bound: f64 = eps.iter().sum();
    Ok(LocalGlobalReport {
        eps,
        distance,
        bound,
        holds: distance <= bound + 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRuleReport {
    /// `H∞(X, Y) − n₂ − log₂(1/eps)`: the floor the conditioned first
    /// block must usually meet.
    pub threshold: f64,
    /// Mass of second-block outcomes whose conditioned first block has
    /// min-entropy at least the threshold.
    pub good_mass: f64,
    /// `good_mass ≥ 1 − eps` (with rounding slack).
    pub holds: bool,
}

/// Measures the min-entropy chain rule on a two-block joint: with
/// probability ≥ 1 − eps over the *second* block `Y = y`, the first block
/// satisfies `H∞(X | Y = y) ≥ H∞(X, Y) − n₂ − log₂(1/eps)`.
///
/// Requires a two-block spec and `eps ∈ (0, 1]`.
pub fn chain_rule_check(x: &BlockDist, eps: f64) -> Result<ChainRuleReport> {
    if x.spec().t() != 2 {
        return Err(Error::NotTwoBlocks(x.spec().t()));
    }
    if !eps.is_finite() || eps <= 0.0 || eps > 1.0 {
        return Err(Error::BadEps(eps));
    }
    let (n1, n2) = (x.spec().lengths()[0], x.spec().lengths()[1]);
    let joint = x.joint();
    let threshold = min_entropy(joint) - n2 as f64 - (1.0 / eps).log2();

    let mut good_mass = 0.0;
    for y in 0..1usize << n2 {
        // Mass and conditional of the first block at this y-column.
        let mask: Vec<bool> = (0..joint.len()).map(|u| u & ((1 << n2) - 1) == y).collect();
        let py: f64 = joint
            .probs()
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(&p, _)| p)
            .sum();
        if py == 0.0 {
            continue;
        }
        let first_given_y = condition(joint, &mask)?.prefix(n1)?;
        if min_entropy(&first_given_y) >= threshold - 1e-9 {
            good_mass += py;
        }
    }
    Ok(ChainRuleReport {
        threshold,
        good_mass,
        holds: good_mass >= 1.0 - eps - 1e-9,
    })
}
