//! Tail-probability bounds for uniformly random functions.
//!
//! For a random table `f : {0,1}^n -> {0,1}^m` and a fixed source `X` of
//! min-entropy `k`, the failure event is that `f(X)` falls short of smooth
//! min-entropy `k - ell` at smoothing `eps`, where the output budget is
//! `m = k - ell + g` with gap `g > 0`.  The probability of that event obeys
//! explicit tail estimates; this module evaluates them as stated, in plain
//! `f64` arithmetic:
//!
//! * [`psi`] — the tail exponent skeleton `max{..., ...}` with a
//!   caller-supplied constant `C` (nothing is hard-coded on its behalf);
//! * [`part1_bound`] — `2^{-(eps*K/2) * (g - (1/L)(3G/g) log2(2*G*g/eps))}`,
//!   sharpest in the extractor-like regime of large `L`;
//! * [`part2_bound`] — `4 * 2^{-(eps*K/6) * (g - (1/floor(L)) log2(1/eps) - 16)}`,
//!   which wins once the gap is large.
//!
//! All logarithms are base two.  `K = 2^k`, `L = 2^ell`, `G = 2^g`.  Bounds
//! are clamped into `[0, 1]` and a clamp is reported via the `vacuous` flag
//! instead of being hidden.  The [`reference`] module re-evaluates every
//! formula in a deliberately different association order (and via natural
//! logs); tests require agreement to `1e-12`, guarding against silent
//! transcription drift in either copy.

use crate::{Error, Result};

/// Parameters of one random-function condensing claim.
///
/// `eps` is the smoothing parameter, `k` the source min-entropy, `ell` the
/// entropy the output is allowed to lose, and `g` the gap between the output
/// length `m = k - ell + g` and the retained entropy.  The loss may exceed
/// `k`; the bounds only weaken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub eps: f64,
    pub k: f64,
    pub ell: f64,
    pub g: f64,
}

impl BoundInputs {
    /// Validates `eps` in `(0, 1]`, `k >= 0`, `ell >= 0` and `g > 0`, all
    /// finite.
    pub fn new(eps: f64, k: f64, ell: f64, g: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 || eps > 1.0 {
            return Err(Error::BadEps(eps));
        }
        if !k.is_finite() || k < 0.0 {
            return Err(Error::BadK(k));
        }
        if !ell.is_finite() || ell < 0.0 {
            return Err(Error::BadEll(ell));
        }
        if !g.is_finite() || g <= 0.0 {
            return Err(Error::BadG(g));
        }
        Ok(Self { eps, k, ell, g })
    }

    /// `K = 2^k`.
    pub fn cap_k(&self) -> f64 {
        self.k.exp2()
    }

    /// `L = 2^ell`.
    pub fn cap_l(&self) -> f64 {
        self.ell.exp2()
    }

    /// `G = 2^g`.
    pub fn cap_g(&self) -> f64 {
        self.g.exp2()
    }
}

/// Which branch of the `psi` maximum wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiBranch {
    /// `g - (1/floor(L)) * log2(1/eps) - C`.
    First,
    /// `g - (1/floor(L)) * log2(C * 2^g * g / eps) * (C * 2^g / g)`.
    Second,
}

/// Both branches of the tail exponent and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    pub first: f64,
    pub second: f64,
    pub winner: PsiBranch,
}

/// Evaluates the tail exponent
/// `psi = max{ g - (1/floor(L)) log2(1/eps) - C,
///             g - (1/floor(L)) log2(C 2^g g / eps) * (C 2^g / g) }`
/// for a caller-supplied constant `C >= 0`.
///
/// At `C = 0` the second branch's multiplier `C 2^g / g` vanishes and the
/// whole subtracted term is taken as zero (the `x log x -> 0` limit: as
/// `C -> 0+` the term behaves like `C log C -> 0`), so the branch evaluates
/// to `g` exactly.  Ties report the first branch.
pub fn psi(b: &BoundInputs, c: f64) -> Result<PsiValue> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::BadConstant(c));
    }
    let l_floor = b.cap_l().floor();
    let first = b.g - (1.0 / l_floor) * (1.0 / b.eps).log2() - c;
    let coeff = c * b.cap_g() / b.g;
    let second = if coeff == 0.0 {
        b.g
    } else {
        b.g - (1.0 / l_floor) * (c * b.cap_g() * b.g / b.eps).log2() * coeff
    };
    let (value, winner) = if second > first {
        (second, PsiBranch::Second)
    } else {
        (first, PsiBranch::First)
    };
    Ok(PsiValue {
        value,
        first,
        second,
        winner,
    })
}

/// A clamped tail probability together with the raw exponent behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part1Bound {
    /// `min(1, 2^{-exponent})`.
    pub probability: f64,
    /// `(eps K / 2) * (g - (1/L)(3G/g) log2(2 G g / eps))`.
    pub exponent: f64,
    /// True when the unclamped value is at least one.
    pub vacuous: bool,
}

/// First tail estimate: failure probability `< 2^{-exponent}` with
/// `exponent = (eps K / 2) * (g - (1/L) * (3G/g) * log2(2 G g / eps))`.
///
/// `L` enters unfloored here.  The bound is useful when `L` is large enough
/// to damp the `3G/g` factor; otherwise the exponent goes nonpositive and
/// the result clamps to the vacuous `1`.
pub fn part1_bound(b: &BoundInputs) -> Result<Part1Bound> {
    let damp = 3.0 * b.cap_g() / (b.g * b.cap_l());
    let inner = b.g - damp * (2.0 * b.cap_g() * b.g / b.eps).log2();
    let exponent = 0.5 * b.eps * b.cap_k() * inner;
    let raw = (-exponent).exp2();
    Ok(Part1Bound {
        probability: raw.min(1.0),
        exponent,
        vacuous: raw >= 1.0,
    })
}

/// A clamped tail probability together with the raw exponent behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part2Bound {
    /// `min(1, 4 * 2^{-exponent})`.
    pub probability: f64,
    /// `(eps K / 6) * (g - (1/floor(L)) log2(1/eps) - 16)`.
    pub exponent: f64,
    /// True when the unclamped value is at least one.
    pub vacuous: bool,
}

/// Second tail estimate: failure probability
/// `<= 4 * 2^{-(eps K / 6) * (g - (1/floor(L)) * log2(1/eps) - 16)}`.
///
/// The additive 16 makes this vacuous below gap 16 at `floor(L) = 1`, but
/// for large gaps it beats [`part1_bound`] by an enormous margin because no
/// `G`-sized factor fights the exponent.
pub fn part2_bound(b: &BoundInputs) -> Result<Part2Bound> {
    let l_floor = b.cap_l().floor();
    let inner = b.g - (1.0 / l_floor) * (1.0 / b.eps).log2() - 16.0;
    let exponent = b.eps * b.cap_k() / 6.0 * inner;
    let raw = 4.0 * (-exponent).exp2();
    Ok(Part2Bound {
        probability: raw.min(1.0),
        exponent,
        vacuous: raw >= 1.0,
    })
}

/// Alternate-order re-implementations of every bound formula.
///
/// Each function evaluates the same mathematical expression as its partner
/// above, but in natural-log domain with products associated differently and
/// compound logarithms expanded into sums.  Tests demand agreement within
/// `1e-12` of the computation's natural scale, so a transcription slip in
/// either copy (a dropped factor, a swapped floor, a wrong base) shows up
/// immediately.
pub mod reference {
    use super::BoundInputs;
    use std::f64::consts::LN_2;

    /// `log2(x)` via natural logs.
    fn lg(x: f64) -> f64 {
        x.ln() / LN_2
    }

    /// Both `psi` branches, second branch with the compound log expanded
    /// into `log2(C) + g + log2(g) - log2(eps)`.
    pub fn psi_branches(b: &BoundInputs, c: f64) -> (f64, f64) {
        let l_floor = b.ell.exp2().floor();
        let first = b.g - lg(1.0 / b.eps) / l_floor - c;
        let coeff = c * b.g.exp2() / b.g;
        let second = if coeff == 0.0 {
            b.g
        } else {
            let log_term = lg(c) + b.g + lg(b.g) - lg(b.eps);
            b.g - coeff / l_floor * log_term
        };
        (first, second)
    }

    /// Part-one exponent with the damping product distributed term by term.
    pub fn part1_exponent(b: &BoundInputs) -> f64 {
        let log_term = (1.0 + b.g) + lg(b.g) - lg(b.eps);
        let damp = (3.0 / b.g) * (b.g - b.ell).exp2();
        b.eps * b.cap_k() * (b.g - damp * log_term) / 2.0
    }

    /// Part-one probability straight from the natural-log domain.
    pub fn part1_probability(b: &BoundInputs) -> f64 {
        (-part1_exponent(b) * LN_2).exp().min(1.0)
    }

    /// Part-two exponent with the division by six performed first.
    pub fn part2_exponent(b: &BoundInputs) -> f64 {
        let l_floor = b.ell.exp2().floor();
        let inner = b.g - lg(1.0 / b.eps) / l_floor - 16.0;
        (b.eps / 6.0) * b.cap_k() * inner
    }

    /// Part-two probability straight from the natural-log domain.
    pub fn part2_probability(b: &BoundInputs) -> f64 {
        (4.0 * (-part2_exponent(b) * LN_2).exp()).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn close(a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= 1e-12 * scale.max(a.abs()).max(b.abs()).max(1.0)
    }

    #[test]
    fn inputs_reject_out_of_domain_parameters() {
        assert_eq!(
            BoundInputs::new(0.0, 1.0, 0.0, 1.0),
            Err(Error::BadEps(0.0))
        );
        assert_eq!(
            BoundInputs::new(1.5, 1.0, 0.0, 1.0),
            Err(Error::BadEps(1.5))
        );
        assert_eq!(
            BoundInputs::new(0.5, -1.0, 0.0, 1.0),
            Err(Error::BadK(-1.0))
        );
        assert_eq!(
            BoundInputs::new(0.5, 1.0, -0.5, 1.0),
            Err(Error::BadEll(-0.5))
        );
        assert_eq!(BoundInputs::new(0.5, 1.0, 0.0, 0.0), Err(Error::BadG(0.0)));
        assert_eq!(
            BoundInputs::new(0.5, 1.0, 0.0, f64::NAN).is_err(),
            true
        );
        assert_eq!(
            psi(&BoundInputs::new(0.5, 1.0, 0.0, 1.0).unwrap(), -1.0),
            Err(Error::BadConstant(-1.0))
        );
    }

    #[test]
    fn psi_first_branch_tends_to_g_minus_c() {
        // With ell enormous, 1/floor(L) is numerically zero, so the first
        // branch sits at exactly g - C while the second sits at g.
        let b = BoundInputs::new(0.25, 4.0, 400.0, 3.0).unwrap();
        let v = psi(&b, 1.5).unwrap();
        assert_eq!(v.first, 3.0 - 1.5);
        assert_eq!(v.second, 3.0);
        assert_eq!(v.value, 3.0);
        assert_eq!(v.winner, PsiBranch::Second);
    }

    #[test]
    fn psi_matches_the_direct_arithmetic_oracle_at_c_zero() {
        // C = 0, g = 2, ell = 1, eps = 1/4: the first branch is
        // 2 - (1/2) * log2(4) - 0 = 1 and the second collapses to g = 2
        // because its multiplier C * 2^g / g is zero.
        let b = BoundInputs::new(0.25, 5.0, 1.0, 2.0).unwrap();
        let v = psi(&b, 0.0).unwrap();
        assert_eq!(v.first, 1.0);
        assert_eq!(v.second, 2.0);
        assert_eq!(v.value, 2.0);
        assert_eq!(v.winner, PsiBranch::Second);
    }

    #[test]
    fn psi_is_nondecreasing_in_ell_on_a_grid() {
        // Grid restricted to C >= 1 and g >= 1 so that the second branch's
        // log term is nonnegative (C * 2^g * g / eps >= 2): both branches
        // are then nondecreasing as floor(L) grows.
        for &c in &[1.0, 2.0, 5.0] {
            for &g in &[1.0, 2.5, 6.0] {
                for &eps in &[1.0, 0.25, 0.03125] {
                    let mut prev = f64::NEG_INFINITY;
                    for i in 0..=40 {
                        let ell = 0.25 * i as f64;
                        let b = BoundInputs::new(eps, 4.0, ell, g).unwrap();
                        let v = psi(&b, c).unwrap().value;
                        assert!(
                            v >= prev - 1e-12,
                            "psi dropped at C={c} g={g} eps={eps} ell={ell}: {prev} -> {v}"
                        );
                        prev = v;
                    }
                }
            }
        }
    }

    #[test]
    fn part1_clamps_to_one_when_the_exponent_is_nonpositive() {
        // ell = 0 leaves the damp factor 3G/g huge against g = 1/2.
        let b = BoundInputs::new(0.125, 5.0, 0.0, 0.5).unwrap();
        let v = part1_bound(&b).unwrap();
        assert!(v.exponent < 0.0);
        assert_eq!(v.probability, 1.0);
        assert!(v.vacuous);
    }

    #[test]
    fn part1_matches_the_worked_arithmetic_oracle() {
        // eps = 1/8, k = 5, ell = 8, g = 1/2.  Then G = sqrt(2) and
        // 2 G g / eps = 8 sqrt(2) = 2^3.5, so the log term is exactly 3.5;
        // the damp factor is (3 sqrt(2) / 0.5) / 256 = 6 sqrt(2) / 256.
        let b = BoundInputs::new(0.125, 5.0, 8.0, 0.5).unwrap();
        let v = part1_bound(&b).unwrap();
        let damp = 6.0 * SQRT_2 / 256.0;
        let want_exp = 2.0 * (0.5 - damp * 3.5);
        assert!(close(v.exponent, want_exp, 1.0), "{} vs {want_exp}", v.exponent);
        assert!(close(v.probability, (-want_exp).exp2(), 1.0));
        assert!(!v.vacuous);
        assert!(v.probability > 0.58 && v.probability < 0.59);
    }

    #[test]
    fn part1_decreases_in_k_where_nonvacuous() {
        let mut prev = f64::INFINITY;
        for i in 0..=14 {
            let k = 0.5 * i as f64 + 1.0;
            let b = BoundInputs::new(0.125, k, 8.0, 0.5).unwrap();
            let v = part1_bound(&b).unwrap();
            assert!(!v.vacuous);
            assert!(
                v.probability < prev,
                "bound failed to drop at k={k}: {prev} -> {}",
                v.probability
            );
            prev = v.probability;
        }
    }

    #[test]
    fn part2_is_vacuous_below_gap_sixteen_at_unit_floor() {
        let b = BoundInputs::new(1.0, 6.0, 0.0, 16.0).unwrap();
        let v = part2_bound(&b).unwrap();
        assert_eq!(v.exponent, 0.0);
        assert_eq!(v.probability, 1.0);
        assert!(v.vacuous);

        let tiny_gap = BoundInputs::new(1.0, 6.0, 0.0, 4.0).unwrap();
        assert!(part2_bound(&tiny_gap).unwrap().vacuous);
    }

    #[test]
    fn part2_matches_the_worked_arithmetic_oracle() {
        // g = 40, k = 10, ell = 0, eps = 1/2: floor(L) = 1, the inner term
        // is 40 - 1 - 16 = 23 and the exponent (eps K / 6) * 23 = 11776/6.
        // 2^{-1962.67} underflows f64, so the probability is exactly zero.
        let b = BoundInputs::new(0.5, 10.0, 0.0, 40.0).unwrap();
        let v = part2_bound(&b).unwrap();
        assert!(close(v.exponent, 11776.0 / 6.0, 1.0));
        assert_eq!(v.probability, 0.0);
        assert!(!v.vacuous);
    }

    #[test]
    fn part2_beats_part1_for_large_gaps_at_small_ell() {
        // At ell = 0 the part-one damp factor carries a 2^g and the bound
        // pins at 1, while part two's exponent grows linearly in g past 18.
        for &g in &[20.0, 25.0, 30.0, 40.0] {
            let b = BoundInputs::new(0.25, 6.0, 0.0, g).unwrap();
            let one = part1_bound(&b).unwrap();
            let two = part2_bound(&b).unwrap();
            assert!(one.vacuous);
            assert!(!two.vacuous);
            assert!(two.probability < one.probability);
        }
        let near = part2_bound(&BoundInputs::new(0.25, 6.0, 0.0, 20.0).unwrap()).unwrap();
        assert!(near.probability > 0.0, "g=20 point should not underflow");
    }

    proptest! {
        // Agreement of the two independent evaluation orders, within
        // 1e-12 of the computation's natural scale (the largest
        // intermediate product), so cancellation in the inner subtraction
        // cannot manufacture spurious mismatches.
        #[test]
        fn bounds_match_the_reference_order(
            eps in 0.01f64..=1.0,
            k in 0.0f64..=12.0,
            ell in 0.0f64..=10.0,
            g in 0.05f64..=10.0,
            c in 0.0f64..=8.0,
        ) {
            let b = BoundInputs::new(eps, k, ell, g).unwrap();

            let v = psi(&b, c).unwrap();
            let (rf, rs) = reference::psi_branches(&b, c);
            let psi_scale = 1.0 + g.abs() + c + (c * b.cap_g() / g) * 40.0;
            prop_assert!(close(v.first, rf, psi_scale));
            prop_assert!(close(v.second, rs, psi_scale));

            let p1 = part1_bound(&b).unwrap();
            let damp = 3.0 * b.cap_g() / (g * b.cap_l());
            let p1_scale = 0.5 * eps * b.cap_k() * (g + damp * 60.0);
            prop_assert!(close(p1.exponent, reference::part1_exponent(&b), p1_scale));
            prop_assert!(close(p1.probability, reference::part1_probability(&b), 1.0));

            let p2 = part2_bound(&b).unwrap();
            let p2_scale = eps * b.cap_k() * (g + 16.0 + (1.0 / eps).log2()) / 6.0;
            prop_assert!(close(p2.exponent, reference::part2_exponent(&b), p2_scale));
            prop_assert!(close(p2.probability, reference::part2_probability(&b), 1.0));
        }
    }
}
