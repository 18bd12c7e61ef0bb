//! Monte-Carlo verification of the random-function condenser claim.
//!
//! The claim under test: for a fixed `(n, k)`-source `X` and a uniformly
//! random table `f : {0,1}^n -> {0,1}^m`, the probability (over `f`) that
//! `f(X)` fails smooth min-entropy `k' = k - ell` at smoothing `eps` is
//! below both explicit tail estimates.  Each trial samples one table,
//! computes the exact output distribution and its exact smooth min-entropy,
//! and scores a failure when the entropy lands below the target.  The
//! empirical failure count is then weighed against `min(part1, part2)`
//! with an exact one-sided binomial test — no normal approximation, since
//! desk-scale experiments see tiny failure counts.

use crate::bounds::{part1_bound, part2_bound, BoundInputs};
use crate::{Error, Result};
use bitdist::{Dist, FunctionTable};
use entropy::{min_entropy, smooth_min_entropy};
use primitives::CondenserParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

/// Slack on the failure comparison `H < k' - FAILURE_TOL`, so exact ties
/// (an output that lands square on the target) never count as failures.
pub const FAILURE_TOL: f64 = 1e-12;

/// Outcome of one Monte-Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub trials: u64,
    /// Trials whose output fell below the smooth min-entropy target.
    pub failures: u64,
    /// `failures / trials`.
    pub rate: f64,
    /// First explicit tail bound at these parameters.
    pub part1: f64,
    /// Second explicit tail bound at these parameters.
    pub part2: f64,
    /// Exact one-sided binomial p-value for H0: true rate <= min(part1,
    /// part2).  Small values (below 1e-3, say) falsify the claimed bound.
    pub p_value: f64,
    /// The entropy target `k' = k - loss`.
    pub threshold: f64,
}

/// Samples `trials` uniformly random tables `{0,1}^n -> {0,1}^m`, counts
/// how many leave `x` pushed forward with smooth min-entropy below
/// `params.k_prime`, and reports the count against the explicit bounds.
///
/// Requirements: the sheet must be seedless (`d = 0`), `m <= 16` keeps the
/// exact entropy evaluation cheap, `eps` must be positive, the gap `m - k'`
/// strictly positive, and `x` must actually meet the min-entropy floor `k`
/// declared by the sheet (any such source qualifies — flatness is not
/// assumed).  Each trial costs `O(2^n)`.
///
/// Reproducibility contract: trial `i` draws its table from
/// `ChaCha12Rng::seed_from_u64(rng_seed)` switched to stream `i + 1`
/// (stream 0 is reserved), reading one value `gen_range(0..2^m)` per input
/// in increasing input order.  Streams make the trials independent of
/// thread schedule, so reports are bitwise reproducible under any `--jobs`
/// setting, and any trial's table can be reconstructed after the fact.
pub fn mc_failure_rate(
    x: &Dist,
    params: &CondenserParams,
    trials: u64,
    rng_seed: u64,
) -> Result<McReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if params.d != 0 {
        return Err(Error::NotSeedless(params.d));
    }
    if params.m > 16 {
        return Err(Error::OutputTooWide(params.m));
    }
    if x.n_bits() != params.n {
        return Err(Error::WidthMismatch {
            expected: params.n,
            got: x.n_bits(),
        });
    }
    let have = min_entropy(x);
    if have < params.k - 1e-9 {
        return Err(Error::EntropyFloor {
            have,
            need: params.k,
        });
    }
    if params.eps <= 0.0 || params.eps > 1.0 {
        return Err(Error::BadEps(params.eps));
    }
    if params.gap <= 0.0 {
        return Err(Error::BadG(params.gap));
    }

    let inputs = BoundInputs::new(params.eps, params.k, params.loss, params.gap)?;
    let part1 = part1_bound(&inputs)?.probability;
    let part2 = part2_bound(&inputs)?.probability;

    let threshold = params.k_prime;
    let n_entries = 1usize << params.n;
    let out_range = 1u32 << params.m;

    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
            rng.set_stream(trial + 1);
            let entries: Vec<usize> = (0..n_entries)
                .map(|_| rng.gen_range(0..out_range) as usize)
                .collect();
            let f = FunctionTable::new(params.n, params.m, entries)
                .expect("sampled entries lie below 2^m");
            let image = x
                .push_forward(&f)
                .expect("table width was built to match the source");
            let h = smooth_min_entropy(&image, params.eps)
                .expect("eps was validated nonnegative")
                .value;
            u64::from(h < threshold - FAILURE_TOL)
        })
        .sum();

    let p0 = part1.min(part2);
    let p_value = if failures == 0 {
        1.0
    } else {
        Binomial::new(p0, trials)
            .expect("bounds are clamped into [0, 1]")
            .sf(failures - 1)
    };

    Ok(McReport {
        trials,
        failures,
        rate: failures as f64 / trials as f64,
        part1,
        part2,
        p_value,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use entropy::check_characterization;

    fn sheet(n: usize, m: usize, k: f64, loss: f64, eps: f64) -> CondenserParams {
        CondenserParams::new(n, 0, m, k, loss, eps).unwrap()
    }

    /// Uniform distribution on the first `2^k` points of `n` bits: the
    /// simplest flat `(n, k)`-source.
    fn flat(n: usize, k: u32) -> Dist {
        let support = 1usize << k;
        let mut probs = vec![0.0; 1 << n];
        for p in probs.iter_mut().take(support) {
            *p = 1.0 / support as f64;
        }
        Dist::new(n, probs).unwrap()
    }

    #[test]
    fn rejects_malformed_requests() {
        let x = Dist::uniform(4);
        let good = sheet(4, 3, 2.0, 1.0, 0.25);
        assert_eq!(
            mc_failure_rate(&x, &good, 0, 1),
            Err(Error::NoTrials)
        );

        let seeded = CondenserParams::new(3, 1, 3, 2.0, 1.0, 0.25).unwrap();
        assert_eq!(
            mc_failure_rate(&x, &seeded, 10, 1),
            Err(Error::NotSeedless(1))
        );

        let wide = sheet(4, 17, 1.0, 0.0, 0.25);
        assert_eq!(
            mc_failure_rate(&x, &wide, 10, 1),
            Err(Error::OutputTooWide(17))
        );

        let narrow_source = Dist::uniform(3);
        assert_eq!(
            mc_failure_rate(&narrow_source, &good, 10, 1),
            Err(Error::WidthMismatch {
                expected: 4,
                got: 3
            })
        );

        let shallow = flat(4, 1);
        let err = mc_failure_rate(&shallow, &good, 10, 1).unwrap_err();
        assert_eq!(
            err,
            Error::EntropyFloor {
                have: 1.0,
                need: 2.0
            }
        );

        let zero_eps = sheet(4, 3, 2.0, 1.0, 0.0);
        assert_eq!(
            mc_failure_rate(&x, &zero_eps, 10, 1),
            Err(Error::BadEps(0.0))
        );

        let zero_gap = sheet(4, 2, 2.0, 0.0, 0.25);
        assert_eq!(
            mc_failure_rate(&x, &zero_gap, 10, 1),
            Err(Error::BadG(0.0))
        );
    }

    #[test]
    fn a_zero_entropy_target_never_fails() {
        // k' = 0: smooth min-entropy is nonnegative, so no table can land
        // below the target.
        let x = Dist::uniform(4);
        let params = sheet(4, 2, 1.0, 1.0, 0.5);
        assert_eq!(params.k_prime, 0.0);
        let report = mc_failure_rate(&x, &params, 200, 99).unwrap();
        assert_eq!(report.failures, 0);
        assert_eq!(report.rate, 0.0);
        assert_eq!(report.p_value, 1.0);
    }

    #[test]
    fn a_huge_gap_with_zero_loss_sees_no_failures() {
        // n = 8, k = 4, ell = 0, m = 12 (gap 8), eps = 2^-10, X uniform on
        // all of {0,1}^8.  A failure would need some 12-bit bucket to
        // swallow more than 2^4 of the 256 inputs; random tables spread 256
        // balls over 4096 bins, so the empirical rate sits at zero.  Both
        // bounds are vacuous here (the sheet is far outside their useful
        // regimes), which the report states rather than hides.
        let x = Dist::uniform(8);
        let params = sheet(8, 12, 4.0, 0.0, 1.0 / 1024.0);
        let report = mc_failure_rate(&x, &params, 300, 7).unwrap();
        assert_eq!(report.failures, 0);
        assert_eq!(report.p_value, 1.0);
        assert_eq!(report.part1, 1.0);
        assert_eq!(report.part2, 1.0);
    }

    #[test]
    fn the_micro_regime_bound_is_exact_and_not_rejected() {
        // eps = 1/8, k = 9, ell = 5, g = 1 (n = 10, m = 5): the part-one
        // inner term is 1 - (6/32) * log2(32) = 1/16 in exact dyadic
        // arithmetic, the exponent is (eps K / 2) / 16 = 2, and the bound
        // is exactly 1/4 — inside the honest (1e-3, 0.3) window.  A true
        // failure would need the 32 output buckets (Poisson-32 loads of
        // 1024 uniform inputs) to overflow their 64-input clip allowance
        // by 128 inputs in total, so the observed count stays far below
        // the bound and the binomial test must not reject.
        let x = Dist::uniform(10);
        let params = sheet(10, 5, 9.0, 5.0, 0.125);
        assert_eq!(params.gap, 1.0);
        let report = mc_failure_rate(&x, &params, 1_500, 20_260_816).unwrap();
        assert!((report.part1 - 0.25).abs() < 1e-12, "{}", report.part1);
        assert_eq!(report.part2, 1.0);
        assert!(
            report.p_value >= 1e-3,
            "binomial test rejected: {report:?}"
        );
        assert!(report.rate <= 0.25, "rate exceeded the bound: {report:?}");
    }

    #[test]
    fn reports_are_bitwise_reproducible_and_schedule_free() {
        let x = flat(6, 3);
        let params = sheet(6, 4, 3.0, 1.0, 0.125);
        let a = mc_failure_rate(&x, &params, 400, 5).unwrap();
        let b = mc_failure_rate(&x, &params, 400, 5).unwrap();
        assert_eq!(a, b);

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_failure_rate(&x, &params, 400, 5))
            .unwrap();
        assert_eq!(a, single);

        let other_seed = mc_failure_rate(&x, &params, 400, 6).unwrap();
        assert_eq!(other_seed.trials, 400);
    }

    #[test]
    fn per_trial_decisions_match_the_characterization_and_the_published_rng_contract() {
        // Rebuild every trial's table from the documented (seed, stream)
        // recipe, decide failure via check_characterization's closed-form
        // verdict, and require (a) exact agreement with the entropy
        // comparison away from knife-edge ties, and (b) that the total
        // matches the parallel run's count.  The regime is chosen so both
        // verdicts actually occur: four flat atoms into 16 buckets collide
        // in roughly a third of trials, and any collision overflows the
        // clip mass at eps = 0.01.
        let x = flat(4, 2);
        let params = sheet(4, 4, 2.0, 0.0, 0.01);
        let trials = 60u64;
        let seed = 11u64;
        let report = mc_failure_rate(&x, &params, trials, seed).unwrap();

        let mut failures = 0u64;
        let mut seen_pass = false;
        let mut seen_fail = false;
        for trial in 0..trials {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(trial + 1);
            let entries: Vec<usize> = (0..1usize << params.n)
                .map(|_| rng.gen_range(0..1u32 << params.m) as usize)
                .collect();
            let f = FunctionTable::new(params.n, params.m, entries).unwrap();
            let image = x.push_forward(&f).unwrap();

            let h = smooth_min_entropy(&image, params.eps).unwrap().value;
            let failed = h < params.k_prime - FAILURE_TOL;
            failures += u64::from(failed);

            if (h - params.k_prime).abs() > 1e-9 {
                let character =
                    check_characterization(&image, params.k_prime, params.eps, &[]).unwrap();
                assert_eq!(
                    failed, !character.formula_holds,
                    "trial {trial}: entropy {h} vs target {}",
                    params.k_prime
                );
                if failed {
                    seen_fail = true;
                } else {
                    seen_pass = true;
                }
            }
        }
        assert_eq!(failures, report.failures);
        assert!(seen_pass && seen_fail, "regime failed to exercise both verdicts");
    }
}
