//! Worst-case error measurement over flat sources.
//!
//! For a fixed output set `S`, the flat `k`-source maximizing
//! `Pr[f(X, U_d) ∈ S]` is simply the `2^k` inputs whose seed-averaged hit
//! rate on `S` is largest. Swapping the two maximizations therefore turns
//! "worst source, worst set" into "worst set, top-`2^k` rows", which is
//! enumerable: exhaustively over all `2^{2^m}` sets via a Gray-code walk
//! (each step flips one output value in/out of `S` and updates every row
//! score in place), or over a deterministic lower-bound family when the
//! output space is too wide.
//!
//! Flat sources suffice: both error functionals are maxima of linear
//! functions of the output distribution, hence convex, and every
//! `k`-source (integral `k`) is a convex combination of flat ones.

use crate::{Error, Result, SeededPrimitive, VerificationRecord, VerifyMethod};

/// Exact (or family-lower-bounded) extractor error at integral input
/// entropy `k`: worst statistical distance of `f(X, U_d)` from uniform
/// over flat `k`-sources `X`. Exhaustive enumeration needs `m ≤ 4`.
pub fn verify_seeded_extractor(
    p: &SeededPrimitive,
    k: usize,
    exhaustive: bool,
) -> Result<VerificationRecord> {
    let m = p.params().m;
    let error = worst_flat_excess(p, k, (m as f64).exp2().recip(), exhaustive)?;
    Ok(VerificationRecord {
        k,
        k_prime: m as f64,
        error,
        method: method(exhaustive),
    })
}

/// Exact (or family-lower-bounded) condenser error at integral input
/// entropy `k` against output floor `k_prime ∈ [0, m]`: worst clip-excess
/// distance of `f(X, U_d)` to the entropy-`k_prime` class over flat
/// `k`-sources. With `k_prime = m` this coincides with the extractor
/// error.
pub fn verify_seeded_condenser(
    p: &SeededPrimitive,
    k: usize,
    k_prime: f64,
    exhaustive: bool,
) -> Result<VerificationRecord> {
    let m = p.params().m;
    if !k_prime.is_finite() || k_prime < 0.0 || k_prime > m as f64 + 1e-9 {
        return Err(Error::BadKPrime { k_prime, m });
    }
    let error = worst_flat_excess(p, k, (-k_prime).exp2(), exhaustive)?;
    Ok(VerificationRecord {
        k,
        k_prime,
        error,
        method: method(exhaustive),
    })
}

fn method(exhaustive: bool) -> VerifyMethod {
    if exhaustive {
        VerifyMethod::Exhaustive
    } else {
        VerifyMethod::Family
    }
}

/// `max_S [ mean of top-2^k row scores on S − |S|·per_element ]`, clamped
/// at zero (the empty set attains 0).
fn worst_flat_excess(
    p: &SeededPrimitive,
    k: usize,
    per_element: f64,
    exhaustive: bool,
) -> Result<f64> {
    let (n, m) = (p.params().n, p.params().m);
    if k > n {
        return Err(Error::BadK { k: k as f64, n });
    }
    let rows = seed_rows(p);
    let big_k = 1usize << k;
    if exhaustive {
        if 1usize << m > 16 {
            return Err(Error::ExhaustiveTooWide(m));
        }
        Ok(exhaustive_excess(&rows, big_k, per_element, m))
    } else {
        Ok(family_excess(&rows, big_k, per_element, m))
    }
}

/// `rows[u][v] = Pr_s[f(u, s) = v]`.
fn seed_rows(p: &SeededPrimitive) -> Vec<Vec<f64>> {
    let (n, d, m) = (p.params().n, p.params().d, p.params().m);
    let seed_weight = ((d as f64).exp2()).recip();
    (0..1usize << n)
        .map(|u| {
            let mut row = vec![0.0; 1usize << m];
            for s in 0..1usize << d {
                row[p.eval(u, s)] += seed_weight;
            }
            row
        })
        .collect()
}

/// Gray-code walk over every output set. `scores[u]` tracks
/// `Pr_s[f(u, s) ∈ S]` and is updated by the single flipped value per
/// step.
fn exhaustive_excess(rows: &[Vec<f64>], big_k: usize, per_element: f64, m: usize) -> f64 {
    let out = 1usize << m;
    let mut scores = vec![0.0f64; rows.len()];
    let mut scratch = vec![0.0f64; rows.len()];
    let mut in_set = vec![false; out];
    let mut size = 0usize;
    let mut worst = 0.0f64;
    for g in 1u64..1u64 << out {
        let v = g.trailing_zeros() as usize;
        if in_set[v] {
            size -= 1;
            for (score, row) in scores.iter_mut().zip(rows) {
                *score -= row[v];
            }
        } else {
            size += 1;
            for (score, row) in scores.iter_mut().zip(rows) {
                *score += row[v];
            }
        }
        in_set[v] = !in_set[v];
        worst = worst.max(top_mean(&scores, &mut scratch, big_k) - size as f64 * per_element);
    }
    worst
}

/// Deterministic lower-bound family: all singletons plus the prefixes of
/// the outputs ordered by aggregate weight (heaviest first).
fn family_excess(rows: &[Vec<f64>], big_k: usize, per_element: f64, m: usize) -> f64 {
    let out = 1usize << m;
    let mut scratch = vec![0.0f64; rows.len()];
    let mut worst = 0.0f64;

    // Singletons.
    let mut scores = vec![0.0f64; rows.len()];
    for v in 0..out {
        for (score, row) in scores.iter_mut().zip(rows) {
            *score = row[v];
        }
        worst = worst.max(top_mean(&scores, &mut scratch, big_k) - per_element);
    }

    // Aggregate-weight descending prefixes.
    let mut order: Vec<usize> = (0..out).collect();
    let agg: Vec<f64> = (0..out).map(|v| rows.iter().map(|r| r[v]).sum()).collect();
    order.sort_by(|&a, &b| agg[b].partial_cmp(&agg[a]).unwrap());
    scores.iter_mut().for_each(|s| *s = 0.0);
    for (j, &v) in order.iter().enumerate() {
        for (score, row) in scores.iter_mut().zip(rows) {
            *score += row[v];
        }
        worst = worst.max(top_mean(&scores, &mut scratch, big_k) - (j + 1) as f64 * per_element);
    }
    worst
}

/// Mean of the `big_k` largest entries (a flat source may put mass on
/// zero-score rows when fewer rows are hot).
fn top_mean(scores: &[f64], scratch: &mut [f64], big_k: usize) -> f64 {
    debug_assert!(big_k >= 1 && big_k <= scores.len());
    scratch.copy_from_slice(scores);
    let (top, nth, _) =
        scratch.select_nth_unstable_by(big_k - 1, |a, b| b.partial_cmp(a).unwrap());
    let sum: f64 = top.iter().sum::<f64>() + *nth;
    sum / big_k as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ip_extractor, CondenserParams};
    use bitdist::FunctionTable;
    use proptest::prelude::*;

    #[test]
    fn inner_product_error_at_full_entropy_is_exact() {
        // Over all 2-bit x and the uniform seed, the inner product hits 1
        // on 6 of 16 input pairs, so the distance from uniform is 1/8.
        let p = ip_extractor(2).unwrap();
        let rec = verify_seeded_extractor(&p, 2, true).unwrap();
        assert_eq!(rec.error, 0.125);
        assert_eq!(rec.method, VerifyMethod::Exhaustive);
    }

    #[test]
    fn condenser_at_full_floor_matches_extractor() {
        let p = ip_extractor(2).unwrap();
        let ext = verify_seeded_extractor(&p, 1, true).unwrap();
        let cond = verify_seeded_condenser(&p, 1, 1.0, true).unwrap();
        assert!((ext.error - cond.error).abs() < 1e-15);
    }

    #[test]
    fn family_is_a_lower_bound() {
        let p = ip_extractor(2).unwrap();
        for k in 0..=2 {
            let exact = verify_seeded_extractor(&p, k, true).unwrap().error;
            let fam = verify_seeded_extractor(&p, k, false).unwrap().error;
            assert!(fam <= exact + 1e-12, "k={k}: family {fam} > exact {exact}");
        }
    }

    #[test]
    fn rejects_bad_levels() {
        let p = ip_extractor(2).unwrap();
        assert!(verify_seeded_extractor(&p, 3, true).is_err());
        assert!(verify_seeded_condenser(&p, 2, 1.5, true).is_err());
        assert!(verify_seeded_condenser(&p, 2, -0.5, true).is_err());
    }

    #[test]
    fn wide_outputs_refuse_exhaustive() {
        let params = CondenserParams::new(1, 5, 5, 1.0, 0.0, 1.0).unwrap();
        let table = FunctionTable::from_fn(6, 5, |u| u & 31).unwrap();
        let p = crate::SeededPrimitive::new(table, params).unwrap();
        assert!(matches!(
            verify_seeded_extractor(&p, 1, true),
            Err(Error::ExhaustiveTooWide(5))
        ));
        assert!(verify_seeded_extractor(&p, 1, false).is_ok());
    }

    proptest! {
        /// Error is nonincreasing in k: more entropy can only help.
        #[test]
        fn error_monotone_in_k(seed_table in prop::collection::vec(0usize..4, 32)) {
            let table = FunctionTable::new(5, 2, seed_table).unwrap();
            let params = CondenserParams::new(3, 2, 2, 0.0, 0.0, 1.0).unwrap();
            let p = crate::SeededPrimitive::new(table, params).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=3usize {
                let e = verify_seeded_extractor(&p, k, true).unwrap().error;
                prop_assert!(e <= prev + 1e-12);
                prev = e;
            }
        }

        /// Exhaustive error equals the clip excess of the worst flat
        /// source computed directly, on tiny instances where flats are
        /// enumerable.
        #[test]
        fn matches_direct_flat_enumeration(seed_table in prop::collection::vec(0usize..4, 8)) {
            let table = FunctionTable::new(3, 2, seed_table).unwrap();
            let params = CondenserParams::new(2, 1, 2, 1.0, 0.5, 1.0).unwrap();
            let p = crate::SeededPrimitive::new(table.clone(), params).unwrap();
            let rec = verify_seeded_condenser(&p, 1, 0.5, true).unwrap();

            // Direct: every flat 1-source on 2 bits is a pair of inputs.
            let mut direct = 0.0f64;
            for a in 0..4usize {
                for b in (a + 1)..4 {
                    let mut q = vec![0.0f64; 4];
                    for s in 0..2usize {
                        q[table.apply((a << 1) | s)] += 0.25;
                        q[table.apply((b << 1) | s)] += 0.25;
                    }
                    let x = bitdist::Dist::new(2, q).unwrap();
                    direct = direct.max(entropy::distance_to_entropy_class(&x, 0.5).unwrap());
                }
            }
            prop_assert!((rec.error - direct).abs() < 1e-12,
                "gray-code {} vs direct {}", rec.error, direct);
        }
    }
}
