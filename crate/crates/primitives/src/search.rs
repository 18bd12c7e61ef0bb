//! Seeded search for tables meeting a verified target.
//!
//! Randomized search derives each candidate from the master seed plus the
//! trial index as an independent ChaCha stream, so candidate `i` is the
//! same table no matter how many trials ran before it — results are
//! bitwise reproducible and resumable.

use bitdist::{push_forward, Dist, FunctionTable};
use entropy::smooth_min_entropy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::{
    verify_seeded_condenser, CondenserParams, Error, Result, SeededPrimitive,
};

/// How much table space a search may cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchBudget {
    /// Enumerate every table in lexicographic order (most significant
    /// table entry first). Requires the table space `(2^m)^(2^n)` to fit
    /// in 24 bits.
    Exhaustive,
    /// Try `trials` independent uniformly random tables.
    Random { trials: u64 },
}

/// Searches for a table whose *measured* condenser error at the sheet's
/// `(k, k_prime)` is within the sheet's `eps`. Returns the first passing
/// candidate with its verification record attached, or `None` when the
/// budget is exhausted. `k` must be integral (flat-source enumeration).
pub fn search_primitive(
    params: &CondenserParams,
    budget: u64,
    rng_seed: u64,
    exhaustive_verify: bool,
) -> Result<Option<SeededPrimitive>> {
    if (params.k - params.k.round()).abs() > 1e-9 {
        return Err(Error::NonIntegralK(params.k));
    }
    let k = params.k.round() as usize;
    let in_bits = params.in_bits();
    let out = 1usize << params.m;
    for trial in 0..budget {
        let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
        rng.set_stream(trial + 1);
        let table: Vec<usize> = (0..1usize << in_bits)
            .map(|_| rng.gen_range(0..out))
            .collect();
        let candidate =
            SeededPrimitive::new(FunctionTable::new(in_bits, params.m, table)?, params.clone())?;
        let record = verify_seeded_condenser(&candidate, k, params.k_prime, exhaustive_verify)?;
        if record.error <= params.eps {
            return Ok(Some(candidate.with_record(record)));
        }
    }
    Ok(None)
}

/// Generic table search: returns the first table (in budget order)
/// accepted by the predicate. The predicate may fail with an error, which
/// aborts the search.
pub fn search_function(
    in_bits: usize,
    out_bits: usize,
    budget: &SearchBudget,
    rng_seed: u64,
    mut accept: impl FnMut(&FunctionTable) -> Result<bool>,
) -> Result<Option<FunctionTable>> {
    let entries = 1usize << in_bits;
    let out = 1usize << out_bits;
    match budget {
        SearchBudget::Exhaustive => {
            let space_bits = out_bits as u32 * entries as u32;
            if space_bits > 24 {
                return Err(Error::TableSpaceTooLarge(space_bits));
            }
            for t in 0..1u64 << space_bits {
                // Lexicographic: entry 0 holds the most significant digit.
                let table: Vec<usize> = (0..entries)
                    .map(|j| {
                        ((t >> ((entries - 1 - j) as u32 * out_bits as u32)) as usize) & (out - 1)
                    })
                    .collect();
                let f = FunctionTable::new(in_bits, out_bits, table)?;
                if accept(&f)? {
                    return Ok(Some(f));
                }
            }
            Ok(None)
        }
        SearchBudget::Random { trials } => {
            for trial in 0..*trials {
                let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
                rng.set_stream(trial + 1);
                let table: Vec<usize> = (0..entries).map(|_| rng.gen_range(0..out)).collect();
                let f = FunctionTable::new(in_bits, out_bits, table)?;
                if accept(&f)? {
                    return Ok(Some(f));
                }
            }
            Ok(None)
        }
    }
}

/// Outcome of a family-condenser search: the measured worst smooth
/// min-entropy over the family at the requested smoothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySearchRecord {
    pub k_prime: f64,
    pub eps: f64,
    pub family_size: usize,
    /// `min over the family of H^eps(f(X))` for the returned table.
    pub worst_value: f64,
}

/// Searches for a *seedless* table `f: {0,1}^in → {0,1}^out` such that
/// every distribution in the family condenses: `H^eps(f(X)) ≥ k_prime`
/// for all `X` in `family`.
pub fn search_family_condenser(
    family: &[Dist],
    in_bits: usize,
    out_bits: usize,
    k_prime: f64,
    eps: f64,
    budget: &SearchBudget,
    rng_seed: u64,
) -> Result<Option<(FunctionTable, FamilySearchRecord)>> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for (index, x) in family.iter().enumerate() {
        if x.n_bits() != in_bits {
            return Err(Error::FamilyWidth {
                index,
                expected: in_bits,
                got: x.n_bits(),
            });
        }
    }
    if !k_prime.is_finite() || k_prime < 0.0 || k_prime > out_bits as f64 + 1e-9 {
        return Err(Error::BadKPrime {
            k_prime,
            m: out_bits,
        });
    }
    if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
        return Err(Error::BadEps(eps));
    }

    let mut worst_value = f64::NAN;
    let found = search_function(in_bits, out_bits, budget, rng_seed, |f| {
        let mut worst = f64::INFINITY;
        for x in family {
            let value = smooth_min_entropy(&push_forward(f, x)?, eps)?.value;
            worst = worst.min(value);
            if worst < k_prime - 1e-9 {
                return Ok(false);
            }
        }
        worst_value = worst;
        Ok(true)
    })?;
    Ok(found.map(|f| {
        let record = FamilySearchRecord {
            k_prime,
            eps,
            family_size: family.len(),
            worst_value,
        };
        (f, record)
    }))
}
