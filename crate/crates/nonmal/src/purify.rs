//! One purification step: halve the rows of a somewhere-source.
//!
//! Given fresh sources `(X, Y)` and the current table `(T₀, …, T_{D−1})`,
//! the new row `j` is `nm(X, Y, T_{2j}, 1) ⊕ nm(X, Y, T_{2j+1}, 2)`: the
//! pair of old rows rides through the two advice branches and collapses
//! into one. Whichever old row was the good one, the XOR inherits its
//! quality — that is precisely the non-malleability guarantee with the
//! sibling row cast as the tampered channel. Each step costs
//! `ε₁ + 4√ε₂ + ε₂` of error and resets the per-row claim to what the
//! condenser's closed form yields.

use bitdist::{Dist, FunctionTable};
use blocks::{verify_block_source, BlockDist, BlockSpec};

use crate::{Error, NmCondenser, Result, SomewhereSource};

/// Rounding guard on entropy comparisons.
const CHECK_TOL: f64 = 1e-9;

/// A somewhere-source in context: the table rows sit in one joint with
/// the fresh sources the next step will consume.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifyInput {
    /// `(X, Y, T₀, …, T_{D−1})` packed MSB-first.
    pub joint: Dist,
    pub rows: usize,
    pub row_bits: usize,
    /// Claimed entropy of the good row, `ℓ`.
    pub claimed_row_entropy: f64,
    /// Claimed distance of the table part from a true somewhere-source.
    pub claimed_error: f64,
}

/// Result of one halving step.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifyOutput {
    /// `(X, Y, R₀, …, R_{D/2−1})` — the sources pass through untouched so
    /// a caller can keep marginalizing, the rows are rebuilt.
    pub joint: Dist,
    /// Marginal of the new rows with the new claim attached.
    pub source: SomewhereSource,
    /// Accumulated error: input claim plus this step's `ε₁ + 4√ε₂ + ε₂`.
    pub claimed_error: f64,
    /// Just this step's contribution.
    pub step_error: f64,
}

/// Runs one purification step, checking the lemma's preconditions: at
/// least two rows, channels wide enough for both advice prefixes, the
/// claimed row entropy within the seed gap's reach (`ℓ ≥ row_bits − g`),
/// and `(X, Y)` an exact block source at the condenser's floor `k₀`.
pub fn purify_step(nm: &NmCondenser, input: &PurifyInput) -> Result<PurifyOutput> {
    let rows = input.rows;
    let w = input.row_bits;
    if rows == 0 || !rows.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(rows));
    }
    if rows == 1 {
        return Err(Error::SingleRow);
    }
    let widest = nm.p1().max(nm.p2());
    if w < widest {
        return Err(Error::PrefixTooWide {
            prefix: widest,
            z_bits: w,
        });
    }
    let ell = input.claimed_row_entropy;
    if !ell.is_finite() || ell < 0.0 || ell > w as f64 {
        return Err(Error::BadRowEntropy {
            claimed: ell,
            row_bits: w,
        });
    }
    // A good row at ℓ bits is a channel whose p_b-bit prefix may fall up
    // to w − ℓ short of full entropy; the condenser absorbs at most g.
    let need = w as f64 - nm.g();
    if ell < need - CHECK_TOL {
        return Err(Error::RowEntropyTooLow { claimed: ell, need });
    }
    if !input.claimed_error.is_finite() || input.claimed_error < 0.0 {
        return Err(Error::BadError(input.claimed_error));
    }
    let (n_x, n_y) = (nm.n_x(), nm.n_y());
    let total = n_x + n_y + rows * w;
    if input.joint.n_bits() != total {
        return Err(Error::JointLayout {
            expected: total,
            got: input.joint.n_bits(),
        });
    }

    // (X, Y) must be a block source at the records' floor.
    let k0 = nm.k0() as f64;
    let xy = input.joint.prefix(n_x + n_y)?;
    let spec = BlockSpec::new(vec![n_x, n_y], vec![k0, k0])?;
    let verdict = verify_block_source(&BlockDist::new(spec, xy)?)?;
    if !verdict.holds {
        let (index, margin) = verdict
            .margins
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("two blocks");
        return Err(Error::InstanceNotBlockSource { index, margin });
    }

    let half = rows / 2;
    let m = nm.m();
    let row_mask = (1usize << w) - 1;
    let map = FunctionTable::from_fn(total, n_x + n_y + half * m, |u| {
        let x = u >> (n_y + rows * w);
        let y = (u >> (rows * w)) & ((1usize << n_y) - 1);
        let mut out = (x << n_y) | y;
        for j in 0..half {
            let t_even = (u >> ((rows - 1 - 2 * j) * w)) & row_mask;
            let t_odd = (u >> ((rows - 2 - 2 * j) * w)) & row_mask;
            let r = nm.eval(x, y, t_even, w, 1).expect("widths validated")
                ^ nm.eval(x, y, t_odd, w, 2).expect("widths validated");
            out = (out << m) | r;
        }
        out
    })?;
    let joint = input.joint.push_forward(&map)?;

    let rows_mask = (1usize << (half * m)) - 1;
    let slice = FunctionTable::from_fn(joint.n_bits(), half * m, |u| u & rows_mask)?;
    let table_marginal = joint.push_forward(&slice)?;

    let step_error = nm.eps1() + 4.0 * nm.eps2().sqrt() + nm.eps2();
    let claimed_error = input.claimed_error + step_error;
    let claimed_row_entropy = nm.bound_entropy().clamp(0.0, m as f64);
    let source = SomewhereSource::new(half, m, table_marginal, claimed_row_entropy)?;
    Ok(PurifyOutput {
        joint,
        source,
        claimed_error,
        step_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micro_nm;
    use bitdist::product;
    use primitives::identity_on_seed;

    /// A 1-bit condenser whose branches just forward the channel bit:
    /// purification through it XOR-folds the rows pairwise.
    fn bit_nm() -> NmCondenser {
        NmCondenser::new(
            identity_on_seed(1, 1, 1).unwrap(),
            identity_on_seed(1, 1, 1).unwrap(),
            identity_on_seed(1, 1, 1).unwrap(),
            identity_on_seed(1, 1, 1).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn the_row_count_halves_and_the_width_follows_the_condenser() {
        let nm = micro_nm().unwrap();
        let input = PurifyInput {
            joint: Dist::uniform(18),
            rows: 2,
            row_bits: 3,
            claimed_row_entropy: 2.0,
            claimed_error: 0.0,
        };
        let out = purify_step(&nm, &input).unwrap();
        assert_eq!(out.source.rows(), 1);
        assert_eq!(out.source.row_bits(), 3);
        assert_eq!(out.joint.n_bits(), 6 + 6 + 3);
        // Step error 2^{−48} + 4·2^{−24} + 2^{−48}.
        let expect = (-48f64).exp2() + 4.0 * (-24f64).exp2() + (-48f64).exp2();
        assert!((out.step_error - expect).abs() < 1e-18);
        assert_eq!(out.claimed_error, out.step_error);
        // The micro deficit eats the whole output width: the claim resets
        // to zero, honestly.
        assert_eq!(out.source.claimed_row_entropy(), 0.0);
        // Uniform input: the fused row is exactly uniform.
        let (_, best) = out.source.best_row(out.claimed_error).unwrap();
        assert!((best - 3.0).abs() < 1e-12);
    }

    #[test]
    fn purification_collapses_eight_rows_to_one() {
        // Forwarding condenser: row j becomes T_{2j} ⊕ T_{2j+1}, so three
        // steps fold eight rows into their XOR.
        let nm = bit_nm();
        let chase = |start: Dist, claim: f64| {
            let mut input = PurifyInput {
                joint: start,
                rows: 8,
                row_bits: 1,
                claimed_row_entropy: claim,
                claimed_error: 0.0,
            };
            let mut sizes = Vec::new();
            loop {
                let out = purify_step(&nm, &input).unwrap();
                assert_eq!(out.step_error, 0.0);
                sizes.push(out.source.rows());
                if out.source.rows() == 1 {
                    assert_eq!(sizes, vec![4, 2, 1]);
                    return out;
                }
                input = PurifyInput {
                    joint: out.joint,
                    rows: out.source.rows(),
                    row_bits: out.source.row_bits(),
                    claimed_row_entropy: out.source.claimed_row_entropy(),
                    claimed_error: out.claimed_error,
                };
            }
        };

        // Independent uniform rows: the XOR of eight of them is uniform.
        let independent = chase(Dist::uniform(10), 1.0);
        let (_, best) = independent.source.best_row(0.0).unwrap();
        assert!((best - 1.0).abs() < 1e-12);

        // All rows equal to one shared uniform bit: the XOR of an even
        // count collapses to the constant zero. The claims still hold —
        // they promise nothing — and the measurement tells the truth.
        let mut probs = vec![0.0; 1 << 10];
        for x in 0..2 {
            for y in 0..2 {
                probs[(((x << 1) | y) << 8) | 0x00] += 0.125;
                probs[(((x << 1) | y) << 8) | 0xff] += 0.125;
            }
        }
        let copies = chase(Dist::new(10, probs).unwrap(), 1.0);
        let (_, best) = copies.source.best_row(0.0).unwrap();
        assert!(best.abs() < 1e-12);
        assert_eq!(copies.source.claimed_row_entropy(), 0.0);
    }

    #[test]
    fn the_error_bookkeeping_matches_the_worked_example() {
        // ε₁ = 0.01, ε₂ = 10⁻⁶: step error 0.01 + 0.004 + 10⁻⁶.
        let nm = bit_nm().with_errors(0.01, 1e-6).unwrap();
        let input = PurifyInput {
            joint: Dist::uniform(10),
            rows: 8,
            row_bits: 1,
            claimed_row_entropy: 1.0,
            claimed_error: 0.25,
        };
        let out = purify_step(&nm, &input).unwrap();
        assert!((out.step_error - 0.014001).abs() < 1e-12);
        assert!((out.claimed_error - 0.264001).abs() < 1e-12);
    }

    #[test]
    fn preconditions_are_enforced_in_order() {
        let nm = micro_nm().unwrap();
        let dummy = Dist::uniform(1);
        let make = |rows, row_bits, ell, err, joint: &Dist| PurifyInput {
            joint: joint.clone(),
            rows,
            row_bits,
            claimed_row_entropy: ell,
            claimed_error: err,
        };

        assert_eq!(
            purify_step(&nm, &make(6, 3, 2.0, 0.0, &dummy)).unwrap_err(),
            Error::NotPowerOfTwo(6)
        );
        assert_eq!(
            purify_step(&nm, &make(1, 3, 2.0, 0.0, &dummy)).unwrap_err(),
            Error::SingleRow
        );
        assert_eq!(
            purify_step(&nm, &make(2, 2, 2.0, 0.0, &dummy)).unwrap_err(),
            Error::PrefixTooWide {
                prefix: 3,
                z_bits: 2
            }
        );
        assert_eq!(
            purify_step(&nm, &make(2, 3, 3.5, 0.0, &dummy)).unwrap_err(),
            Error::BadRowEntropy {
                claimed: 3.5,
                row_bits: 3
            }
        );
        assert_eq!(
            purify_step(&nm, &make(2, 3, 1.5, 0.0, &dummy)).unwrap_err(),
            Error::RowEntropyTooLow {
                claimed: 1.5,
                need: 2.0
            }
        );
        assert_eq!(
            purify_step(&nm, &make(2, 3, 2.0, -0.1, &dummy)).unwrap_err(),
            Error::BadError(-0.1)
        );
        assert_eq!(
            purify_step(&nm, &make(2, 3, 2.0, 0.0, &Dist::uniform(17))).unwrap_err(),
            Error::JointLayout {
                expected: 18,
                got: 17
            }
        );

        // X constant: the (X, Y) precondition fails at block 0.
        let rest = product(&Dist::uniform(6), &Dist::uniform(6)).unwrap();
        let frozen = product(&Dist::point_mass(6, 0).unwrap(), &rest).unwrap();
        match purify_step(&nm, &make(2, 3, 2.0, 0.0, &frozen)) {
            Err(Error::InstanceNotBlockSource { index: 0, margin }) => {
                assert!((margin + 4.0).abs() < 1e-9);
            }
            other => panic!("expected precondition failure, got {other:?}"),
        }
    }

    #[test]
    fn the_output_joint_marginalizes_consistently() {
        let nm = micro_nm().unwrap();
        // A correlated input: T₀ = low bits of Y, T₁ uniform.
        let mut probs = vec![0.0; 1 << 18];
        let w = 1.0 / (64.0 * 64.0 * 8.0);
        for x in 0..64usize {
            for y in 0..64usize {
                for t1 in 0..8usize {
                    probs[(((x << 6) | y) << 6) | ((y & 7) << 3) | t1] += w;
                }
            }
        }
        let joint = Dist::new(18, probs).unwrap();
        let input = PurifyInput {
            joint: joint.clone(),
            rows: 2,
            row_bits: 3,
            claimed_row_entropy: 2.0,
            claimed_error: 0.0,
        };
        let out = purify_step(&nm, &input).unwrap();

        // The source is exactly the rows-marginal of the output joint.
        let mask = (1usize << 3) - 1;
        let slice = FunctionTable::from_fn(15, 3, |u| u & mask).unwrap();
        let expect = out.joint.push_forward(&slice).unwrap();
        for v in 0..8 {
            assert!((out.source.dist().prob(v) - expect.prob(v)).abs() < 1e-12);
        }
        // And (X, Y) pass through verbatim.
        let before = joint.prefix(12).unwrap();
        let after = out.joint.prefix(12).unwrap();
        for v in 0..1 << 12 {
            assert!((before.prob(v) - after.prob(v)).abs() < 1e-12);
        }
    }
}
