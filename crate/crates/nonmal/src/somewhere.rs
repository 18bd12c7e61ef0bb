//! Somewhere-sources and exactly-verified baseline somewhere-condensers.
//!
//! A somewhere-source is a table of `D` rows of `m` bits with the promise
//! that *some* row — the prover does not say which — carries min-entropy
//! `ℓ`. Baseline somewhere-condensers here are checked against the
//! stronger, exactly decidable condition "for every flat block source at
//! the spec's floors, some output row has `H^ε ≥ ℓ`": the flat sources
//! (uniform on a product of per-block supports meeting the floors) are
//! the extreme points of the block-source family, and the family is small
//! enough at desk scale to enumerate outright.

use bitdist::{Dist, FunctionTable};
use blocks::BlockSpec;
use entropy::smooth_min_entropy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::{Error, Result};

/// Rounding guard on entropy margins.
const CHECK_TOL: f64 = 1e-9;

/// Cap on the flat-source family a verification sweep may enumerate.
pub const FAMILY_CAP: usize = 200_000;

/// A `rows × row_bits` table-valued source with a claimed per-row
/// entropy: somewhere in the table, one row is good.
#[derive(Clone, Debug, PartialEq)]
pub struct SomewhereSource {
    rows: usize,
    row_bits: usize,
    dist: Dist,
    claimed_row_entropy: f64,
}

impl SomewhereSource {
    /// `dist` spans the concatenated rows MSB-first (row 0 on top); the
    /// row count must be a power of two.
    pub fn new(rows: usize, row_bits: usize, dist: Dist, claimed_row_entropy: f64) -> Result<Self> {
        if rows == 0 || !rows.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(rows));
        }
        if rows * row_bits != dist.n_bits() {
            return Err(Error::RowLayout {
                rows,
                row_bits,
                n_bits: dist.n_bits(),
            });
        }
        if !claimed_row_entropy.is_finite()
            || claimed_row_entropy < 0.0
            || claimed_row_entropy > row_bits as f64
        {
            return Err(Error::BadRowEntropy {
                claimed: claimed_row_entropy,
                row_bits,
            });
        }
        Ok(SomewhereSource {
            rows,
            row_bits,
            dist,
            claimed_row_entropy,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row_bits(&self) -> usize {
        self.row_bits
    }

    pub fn dist(&self) -> &Dist {
        &self.dist
    }

    pub fn claimed_row_entropy(&self) -> f64 {
        self.claimed_row_entropy
    }

    /// Marginal distribution of row `index` (row 0 is the top bits).
    pub fn row_marginal(&self, index: usize) -> Result<Dist> {
        if index >= self.rows {
            return Err(Error::RowIndex {
                index,
                rows: self.rows,
            });
        }
        let shift = (self.rows - 1 - index) * self.row_bits;
        let mask = (1usize << self.row_bits) - 1;
        let slice = FunctionTable::from_fn(self.dist.n_bits(), self.row_bits, |u| {
            (u >> shift) & mask
        })?;
        Ok(self.dist.push_forward(&slice)?)
    }

    /// The row with the largest `H^ε` of its marginal, and that value.
    /// Marginal entropy is a necessary face of the somewhere promise (and
    /// the honest one to report); the sufficient, mixture-aware test is
    /// [`crate::hull_distance`].
    pub fn best_row(&self, eps: f64) -> Result<(usize, f64)> {
        let mut best = (0, f64::NEG_INFINITY);
        for index in 0..self.rows {
            let value = smooth_min_entropy(&self.row_marginal(index)?, eps)?.value;
            if value > best.1 {
                best = (index, value);
            }
        }
        Ok(best)
    }
}

/// Outcome of sweeping a candidate table over the flat-source family.
#[derive(Clone, Debug, PartialEq)]
pub struct SomewhereVerify {
    /// True when every flat in the family had some row at `H^ε ≥ ℓ`.
    pub holds: bool,
    /// Worst over swept flats of the best row margin `H^ε − ℓ`. When the
    /// sweep aborted at a failure, the minimum over the flats seen.
    pub worst_margin: f64,
    /// Number of flat sources in the family.
    pub family_size: usize,
    /// Per-block support masks of the first failing flat, if any.
    pub failing_flat: Option<Vec<usize>>,
}

/// Decides the strong somewhere-condenser condition by exhausting the
/// flat-source family of `spec`: every product of per-block supports of
/// size ≥ ⌈2^floor⌉, uniform on each block. Aborts at the first failing
/// flat (smallest supports are swept first, which is where failures
/// live).
pub fn verify_somewhere_condenser(
    table: &FunctionTable,
    spec: &BlockSpec,
    rows: usize,
    row_bits: usize,
    ell: f64,
    eps: f64,
) -> Result<SomewhereVerify> {
    if table.in_bits() != spec.total_bits() || table.out_bits() != rows * row_bits {
        return Err(Error::TableShape {
            want_in: spec.total_bits(),
            want_out: rows * row_bits,
            got_in: table.in_bits(),
            got_out: table.out_bits(),
        });
    }
    if rows == 0 || !rows.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(rows));
    }
    if !ell.is_finite() || ell < 0.0 || ell > row_bits as f64 {
        return Err(Error::BadRowEntropy {
            claimed: ell,
            row_bits,
        });
    }
    if !eps.is_finite() || !(0.0..1.0).contains(&eps) {
        return Err(Error::BadEps(eps));
    }

    // Size the family before enumerating anything.
    let t = spec.t();
    let mut family_size = 1usize;
    for i in 0..t {
        family_size = family_size.saturating_mul(family_count(spec.lengths()[i], spec.floors()[i]));
    }
    if family_size > FAMILY_CAP {
        return Err(Error::FamilyTooLarge {
            size: family_size,
            cap: FAMILY_CAP,
        });
    }
    let per_block: Vec<Vec<usize>> = (0..t)
        .map(|i| block_masks(spec.lengths()[i], spec.floors()[i]))
        .collect();
    let row_mask = (1usize << row_bits) - 1;

    let mut worst = f64::INFINITY;
    let mut idx = vec![0usize; t];
    loop {
        let masks: Vec<usize> = (0..t).map(|i| per_block[i][idx[i]]).collect();
        let supports: Vec<Vec<usize>> = masks
            .iter()
            .zip(spec.lengths())
            .map(|(&mask, &len)| (0..1usize << len).filter(|v| mask >> v & 1 == 1).collect())
            .collect();
        let count: usize = supports.iter().map(Vec::len).product();
        let weight = 1.0 / count as f64;

        let mut rowprobs = vec![vec![0.0f64; 1 << row_bits]; rows];
        for c in 0..count {
            let mut rem = c;
            let mut u = 0usize;
            for (support, &len) in supports.iter().zip(spec.lengths()) {
                let digit = rem % support.len();
                rem /= support.len();
                u = (u << len) | support[digit];
            }
            let out = table.apply(u);
            for (r, probs) in rowprobs.iter_mut().enumerate() {
                probs[(out >> ((rows - 1 - r) * row_bits)) & row_mask] += weight;
            }
        }

        let mut best = f64::NEG_INFINITY;
        for probs in rowprobs {
            let value = smooth_min_entropy(&Dist::new(row_bits, probs)?, eps)?.value;
            best = best.max(value - ell);
        }
        worst = worst.min(best);
        if best < -CHECK_TOL {
            return Ok(SomewhereVerify {
                holds: false,
                worst_margin: worst,
                family_size,
                failing_flat: Some(masks),
            });
        }

        // Odometer over the per-block mask lists.
        let mut pos = t;
        loop {
            if pos == 0 {
                return Ok(SomewhereVerify {
                    holds: true,
                    worst_margin: worst,
                    family_size,
                    failing_flat: None,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < per_block[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// A verified table found by [`search_somewhere_condenser`].
#[derive(Clone, Debug, PartialEq)]
pub struct SomewhereSearch {
    pub table: FunctionTable,
    pub verify: SomewhereVerify,
    /// Random candidates drawn before success (0 when the identity
    /// projection already verified).
    pub trials_used: u64,
    pub from_identity: bool,
}

/// Finds a table passing [`verify_somewhere_condenser`]. When the shapes
/// line up, the identity projection (row `i` = block `i` verbatim) is
/// tried first — against flat sources it is a perfect somewhere-condenser
/// at `ℓ = min floor`, which is exactly the baseline the purification
/// pipeline wants. Otherwise, or when the identity falls short of `ℓ`,
/// uniformly random tables are drawn and verified exactly.
pub fn search_somewhere_condenser(
    spec: &BlockSpec,
    rows: usize,
    row_bits: usize,
    ell: f64,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<SomewhereSearch> {
    if spec.total_bits() == rows * row_bits {
        let identity = FunctionTable::from_fn(spec.total_bits(), spec.total_bits(), |u| u)?;
        let verify = verify_somewhere_condenser(&identity, spec, rows, row_bits, ell, eps)?;
        if verify.holds {
            return Ok(SomewhereSearch {
                table: identity,
                verify,
                trials_used: 0,
                from_identity: true,
            });
        }
    } else {
        // Validate parameters once up front so a doomed search reports
        // its real problem instead of SearchFailed.
        let probe = FunctionTable::from_fn(spec.total_bits(), rows * row_bits, |_| 0)?;
        verify_somewhere_condenser(&probe, spec, rows, row_bits, ell, eps)?;
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let out_count = 1usize << (rows * row_bits);
    for trial in 0..trials {
        let entries: Vec<usize> = (0..1usize << spec.total_bits())
            .map(|_| rng.gen_range(0..out_count))
            .collect();
        let table = FunctionTable::new(spec.total_bits(), rows * row_bits, entries)?;
        let verify = verify_somewhere_condenser(&table, spec, rows, row_bits, ell, eps)?;
        if verify.holds {
            return Ok(SomewhereSearch {
                table,
                verify,
                trials_used: trial + 1,
                from_identity: false,
            });
        }
    }
    Err(Error::SearchFailed { trials })
}

/// Number of supports of a `width`-bit block at `floor`: subsets of size
/// ≥ ⌈2^floor⌉, saturating.
fn family_count(width: usize, floor: f64) -> usize {
    let size = 1usize << width;
    let need = (floor.exp2().ceil().max(1.0)) as usize;
    if need > size {
        return 0;
    }
    let mut total = 0usize;
    for j in need..=size {
        total = total.saturating_add(binomial(size, j));
    }
    total
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// All support masks of popcount ≥ ⌈2^floor⌉, smallest supports first.
fn block_masks(width: usize, floor: f64) -> Vec<usize> {
    let size = 1usize << width;
    let need = (floor.exp2().ceil().max(1.0)) as usize;
    let full = if size == usize::BITS as usize {
        usize::MAX
    } else {
        (1usize << size) - 1
    };
    let mut masks = Vec::new();
    for j in need..=size {
        // Gosper's hack walks the masks of fixed popcount in order.
        let mut v = (1usize << j) - 1;
        loop {
            masks.push(v);
            if j == size {
                break;
            }
            let c = v & v.wrapping_neg();
            let r = v + c;
            let next = (((r ^ v) >> 2) / c) | r;
            if next > full {
                break;
            }
            v = next;
        }
    }
    masks
}

#[cfg(test)]
mod tests {
    use super::*;
    use bitdist::product;

    fn cg_spec() -> BlockSpec {
        BlockSpec::new(vec![3, 3], vec![2.0, 2.0]).unwrap()
    }

    #[test]
    fn source_layout_is_validated() {
        assert_eq!(
            SomewhereSource::new(3, 2, Dist::uniform(6), 1.0).unwrap_err(),
            Error::NotPowerOfTwo(3)
        );
        assert_eq!(
            SomewhereSource::new(2, 2, Dist::uniform(6), 1.0).unwrap_err(),
            Error::RowLayout {
                rows: 2,
                row_bits: 2,
                n_bits: 6
            }
        );
        assert_eq!(
            SomewhereSource::new(2, 3, Dist::uniform(6), 3.5).unwrap_err(),
            Error::BadRowEntropy {
                claimed: 3.5,
                row_bits: 3
            }
        );
        let s = SomewhereSource::new(2, 3, Dist::uniform(6), 2.0).unwrap();
        assert_eq!(
            s.row_marginal(2).unwrap_err(),
            Error::RowIndex { index: 2, rows: 2 }
        );
    }

    #[test]
    fn row_marginals_slice_the_right_bits() {
        let top = Dist::new(2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let bottom = Dist::point_mass(2, 3).unwrap();
        let joint = product(&top, &bottom).unwrap();
        let s = SomewhereSource::new(2, 2, joint, 1.0).unwrap();
        let r0 = s.row_marginal(0).unwrap();
        let r1 = s.row_marginal(1).unwrap();
        for v in 0..4 {
            assert!((r0.prob(v) - top.prob(v)).abs() < 1e-12);
            assert!((r1.prob(v) - bottom.prob(v)).abs() < 1e-12);
        }
        // Row 0 is the one carrying entropy.
        let (index, value) = s.best_row(0.0).unwrap();
        assert_eq!(index, 0);
        assert!((value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn the_identity_projection_is_a_perfect_somewhere_condenser() {
        let identity = FunctionTable::from_fn(6, 6, |u| u).unwrap();
        let verify = verify_somewhere_condenser(&identity, &cg_spec(), 2, 3, 2.0, 0.0).unwrap();
        assert!(verify.holds);
        assert_eq!(verify.family_size, 163 * 163);
        // The binding flats are the minimal ones: |S| = 4 gives a uniform
        // row at exactly ℓ = 2.
        assert!(verify.worst_margin.abs() < 1e-12, "{}", verify.worst_margin);
        assert_eq!(verify.failing_flat, None);
    }

    #[test]
    fn a_constant_table_fails_with_a_witness() {
        let constant = FunctionTable::from_fn(6, 6, |_| 0).unwrap();
        let verify = verify_somewhere_condenser(&constant, &cg_spec(), 2, 3, 2.0, 0.0).unwrap();
        assert!(!verify.holds);
        // Point-mass rows have H = 0, margin −2, seen on the very first
        // flat.
        assert!((verify.worst_margin + 2.0).abs() < 1e-12);
        let flat = verify.failing_flat.unwrap();
        assert_eq!(flat.len(), 2);
        assert_eq!(flat[0].count_ones(), 4);
    }

    #[test]
    fn search_tries_the_identity_first() {
        let found = search_somewhere_condenser(&cg_spec(), 2, 3, 2.0, 0.0, 0, 11).unwrap();
        assert!(found.from_identity);
        assert_eq!(found.trials_used, 0);
        assert!(found.verify.holds);
    }

    #[test]
    fn random_search_finds_a_compressing_table() {
        // 6 bits into 2×2: no identity available, the search is genuinely
        // random. At ℓ = 1, ε = 1/8 random tables pass easily.
        let found = search_somewhere_condenser(&cg_spec(), 2, 2, 1.0, 0.125, 500, 7).unwrap();
        assert!(!found.from_identity);
        assert!(found.trials_used >= 1);
        assert!(found.verify.holds);
        assert!(found.verify.worst_margin >= -CHECK_TOL);
        assert_eq!(found.table.in_bits(), 6);
        assert_eq!(found.table.out_bits(), 4);
    }

    #[test]
    fn impossible_targets_fail_honestly() {
        // ℓ = 2 on 2-bit rows at ε = 0 demands an exactly uniform row on
        // every flat — no random table survives even the first flats.
        assert_eq!(
            search_somewhere_condenser(&cg_spec(), 2, 2, 2.0, 0.0, 3, 5).unwrap_err(),
            Error::SearchFailed { trials: 3 }
        );
    }

    #[test]
    fn verification_rejects_malformed_requests() {
        let spec = cg_spec();
        let table = FunctionTable::from_fn(6, 6, |u| u).unwrap();
        assert_eq!(
            verify_somewhere_condenser(&table, &spec, 2, 2, 1.0, 0.0).unwrap_err(),
            Error::TableShape {
                want_in: 6,
                want_out: 4,
                got_in: 6,
                got_out: 6
            }
        );
        assert_eq!(
            verify_somewhere_condenser(&table, &spec, 3, 2, 1.0, 0.0).unwrap_err(),
            Error::NotPowerOfTwo(3)
        );
        assert_eq!(
            verify_somewhere_condenser(&table, &spec, 2, 3, 4.0, 0.0).unwrap_err(),
            Error::BadRowEntropy {
                claimed: 4.0,
                row_bits: 3
            }
        );
        assert_eq!(
            verify_somewhere_condenser(&table, &spec, 2, 3, 2.0, 1.0).unwrap_err(),
            Error::BadEps(1.0)
        );

        // Zero floors explode the family combinatorially.
        let wide = BlockSpec::new(vec![3, 3, 3], vec![0.0, 0.0, 0.0]).unwrap();
        let nine = FunctionTable::from_fn(9, 4, |u| u & 15).unwrap();
        assert_eq!(
            verify_somewhere_condenser(&nine, &wide, 2, 2, 1.0, 0.0).unwrap_err(),
            Error::FamilyTooLarge {
                size: 255 * 255 * 255,
                cap: FAMILY_CAP
            }
        );
    }

    #[test]
    fn a_full_width_floor_pins_that_block_to_its_full_flat() {
        // Floor 2 on a 2-bit block admits only the full support, so the
        // family is 1 × 11 and the identity's first row is uniform in
        // every member: the margin over ℓ = 1 is exactly one bit.
        let spec = BlockSpec::new(vec![2, 2], vec![2.0, 1.0]).unwrap();
        let table = FunctionTable::from_fn(4, 4, |u| u).unwrap();
        let verify = verify_somewhere_condenser(&table, &spec, 2, 2, 1.0, 0.0).unwrap();
        assert!(verify.holds);
        assert_eq!(verify.family_size, 11);
        assert!((verify.worst_margin - 1.0).abs() < 1e-12);
    }
}
