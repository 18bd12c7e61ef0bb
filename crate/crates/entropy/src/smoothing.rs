//! Conditional smoothing transfers between close joint distributions.
//!
//! If two joints `(A, B)` and `(A′, B′)` are within statistical distance
//! ε, then few conditionals of the first can be badly non-smooth unless
//! the same is visible in the second at half the smoothing radius:
//!
//! ```text
//! Pr_{a∼A}[ H^γ(B | A=a) < k ]
//!     ≤ Pr_{a∼A′}[ H^{γ/2}(B′ | A′=a) < k ] + 4ε/γ + ε.
//! ```
//!
//! [`closeness_smoothing_check`] measures both sides exactly and reports
//! whether the inequality holds (it must; the check exists to exercise the
//! bound and expose its slack).

use bitdist::{statistical_distance, Dist};

use crate::{smooth_min_entropy, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingClaimReport {
    /// Statistical distance between the two joints.
    pub eps: f64,
    /// Mass of first-joint prefixes whose conditional `H^γ` is below `k`.
    pub lhs: f64,
    /// Mass of second-joint prefixes whose conditional `H^{γ/2}` is below `k`.
    pub rhs_prob: f64,
    /// `rhs_prob + 4ε/γ + ε`, the full right-hand side.
    pub bound: f64,
    /// `lhs ≤ bound + 1e-9`.
    pub holds: bool,
}

/// Measures the conditional-smoothing inequality for the two joints over
/// `a_bits + b_bits` bits (the first `a_bits` are the conditioning
/// prefix). Requires `gamma > 0` and equal widths.
pub fn closeness_smoothing_check(
    joint: &Dist,
    a_bits: usize,
    joint2: &Dist,
    k: f64,
    gamma: f64,
) -> Result<SmoothingClaimReport> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::BadGamma(gamma));
    }
    if a_bits > joint.n_bits() {
        return Err(Error::BadSplit {
            a_bits,
            n_bits: joint.n_bits(),
        });
    }
    let eps = statistical_distance(joint, joint2)?;

    let lhs = bad_prefix_mass(joint, a_bits, k, gamma)?;
    let rhs_prob = bad_prefix_mass(joint2, a_bits, k, gamma / 2.0)?;
    let bound = rhs_prob + 4.0 * eps / gamma + eps;

    Ok(SmoothingClaimReport {
        eps,
        lhs,
        rhs_prob,
        bound,
        holds: lhs <= bound + 1e-9,
    })
}

/// Total mass of prefixes `a` whose conditional suffix has
/// `H^smoothing < k`.
fn bad_prefix_mass(joint: &Dist, a_bits: usize, k: f64, smoothing: f64) -> Result<f64> {
    let marginal = joint.prefix(a_bits)?;
    let mut mass = 0.0;
    for a in 0..marginal.len() {
        let pa = marginal.prob(a);
        if pa == 0.0 {
            continue;
        }
        let cond = joint
            .suffix_conditional(a_bits, a)?
            .expect("prefix has positive mass");
        if smooth_min_entropy(&cond, smoothing)?.value < k {
            mass += pa;
        }
    }
    Ok(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bitdist::{mix, product};
    use proptest::prelude::*;

    #[test]
    fn identical_joints_always_pass() {
        // With ε = 0 the bound reduces to monotonicity of H^ε in ε.
        let joint = product(&Dist::uniform(1), &Dist::point_mass(2, 0).unwrap()).unwrap();
        let r = closeness_smoothing_check(&joint, 1, &joint, 1.5, 0.3).unwrap();
        assert_eq!(r.eps, 0.0);
        assert!(r.holds);
        assert!(r.lhs <= r.rhs_prob + 1e-12);
    }

    #[test]
    fn perturbed_joint_stays_within_bound() {
        // First joint: under a=0 the suffix is a point mass (low smooth
        // entropy); second joint replaces it with uniform. The distance
        // term absorbs the gap.
        let bad = product(&Dist::point_mass(1, 0).unwrap(), &Dist::point_mass(2, 0).unwrap())
            .unwrap();
        let good = product(&Dist::point_mass(1, 0).unwrap(), &Dist::uniform(2)).unwrap();
        let blended = mix(&[(0.9, good.clone()), (0.1, bad)]).unwrap();
        let r = closeness_smoothing_check(&blended, 1, &good, 1.9, 0.5).unwrap();
        assert!(r.holds, "{r:?}");

        assert!(closeness_smoothing_check(&good, 1, &good, 1.0, 0.0).is_err());
        assert!(closeness_smoothing_check(&good, 4, &good, 1.0, 0.1).is_err());
    }

    fn arb_dist(n_bits: usize) -> impl Strategy<Value = Dist> {
        prop::collection::vec(0.0f64..1.0, 1usize << n_bits).prop_map(move |mut v| {
            let mut total: f64 = v.iter().sum();
            if total <= 0.0 {
                v[0] = 1.0;
                total = 1.0;
            }
            for x in &mut v {
                *x /= total;
            }
            Dist::new(n_bits, v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn holds_on_random_joint_pairs(
            a in arb_dist(4),
            b in arb_dist(4),
            k in 0.0f64..3.0,
            gamma in 0.05f64..1.0,
        ) {
            let r = closeness_smoothing_check(&a, 2, &b, k, gamma).unwrap();
            prop_assert!(r.holds, "violated: {r:?}");
        }
    }
}
