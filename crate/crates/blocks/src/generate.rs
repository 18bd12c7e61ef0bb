//! Seeded generators for synthetic block-source instances.
//!
//! Test suites and the CLI's self-checks need a steady supply of exact
//! block sources, almost-block perturbations, and admissibly tampered
//! joints. Everything here is driven by a caller-supplied RNG so runs are
//! reproducible from a single seed.

use bitdist::Dist;
use entropy::nearest_with_min_entropy;
use rand::Rng;

use crate::{BlockDist, BlockSpec, Result};

/// A random dense distribution: i.i.d. uniform weights, normalized.
pub fn random_dist(rng: &mut impl Rng, n_bits: usize) -> Dist {
    let mut probs: Vec<f64> = (0..1usize << n_bits).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Dist::new(n_bits, probs).expect("normalized by construction")
}

/// A random joint with block structure but no entropy promises.
pub fn random_joint(rng: &mut impl Rng, lengths: &[usize]) -> Result<BlockDist> {
    let spec = BlockSpec::unrestricted(lengths.to_vec())?;
    let joint = random_dist(rng, spec.total_bits());
    BlockDist::new(spec, joint)
}

/// A random *exact* block source: every conditional is an independently
/// sampled distribution snapped onto its entropy floor.
pub fn random_block_source(
    rng: &mut impl Rng,
    lengths: &[usize],
    floors: &[f64],
) -> Result<BlockDist> {
    let spec = BlockSpec::new(lengths.to_vec(), floors.to_vec())?;
    let mut cur = vec![1.0f64];
    for (i, &n_i) in spec.lengths().iter().enumerate() {
        let mut next = vec![0.0; cur.len() << n_i];
        for (v, &pv) in cur.iter().enumerate() {
            let cond = nearest_with_min_entropy(&random_dist(rng, n_i), spec.floors()[i])?;
            let base = v << n_i;
            for (w, &pw) in cond.probs().iter().enumerate() {
                next[base | w] = pv * pw;
            }
        }
        cur = next;
    }
    let joint = Dist::new(spec.total_bits(), cur)?;
    Ok(BlockDist::new(spec, joint)?)
}

/// An exact block source with some conditionals blended toward a random
/// point mass: each prefix independently gets a spike with probability
/// `spike_prob`, of weight uniform in `[0, max_delta]`. The result is an
/// almost-block source whose measured deviation the caller can bound via
/// [`crate::measure_almost_params`].
pub fn random_almost_block_source(
    rng: &mut impl Rng,
    lengths: &[usize],
    floors: &[f64],
    spike_prob: f64,
    max_delta: f64,
) -> Result<BlockDist> {
    let spec = BlockSpec::new(lengths.to_vec(), floors.to_vec())?;
    let mut cur = vec![1.0f64];
    for (i, &n_i) in spec.lengths().iter().enumerate() {
        let mut next = vec![0.0; cur.len() << n_i];
        for (v, &pv) in cur.iter().enumerate() {
            let clean = nearest_with_min_entropy(&random_dist(rng, n_i), spec.floors()[i])?;
            let cond = if rng.gen_bool(spike_prob) {
                let delta = rng.gen_range(0.0..=max_delta);
                let spike = Dist::point_mass(n_i, rng.gen_range(0..1usize << n_i))?;
                bitdist::mix(&[(1.0 - delta, clean), (delta, spike)])?
            } else {
                clean
            };
            let base = v << n_i;
            for (w, &pw) in cond.probs().iter().enumerate() {
                next[base | w] = pv * pw;
            }
        }
        cur = next;
    }
    let joint = Dist::new(spec.total_bits(), cur)?;
    Ok(BlockDist::new(spec, joint)?)
}

/// Joint of `x` with a tampered copy where `X'_j = f(j, X_j, R_j)` for
/// independent uniform `R_j` on `r_bits` bits — the canonical admissible
/// tampering (each tampered block sees only its own source block and
/// fresh randomness).
pub fn per_block_tampering(
    _rng: &mut impl Rng,
    x: &BlockDist,
    xprime_lengths: &[usize],
    r_bits: usize,
    f: impl Fn(usize, usize, usize) -> usize,
) -> Result<Dist> {
    let channels: Vec<Vec<Vec<f64>>> = x
        .spec()
        .lengths()
        .iter()
        .enumerate()
        .map(|(j, &n_j)| {
            let out = 1usize << xprime_lengths[j];
            (0..1usize << n_j)
                .map(|xj| {
                    let mut row = vec![0.0; out];
                    for r in 0..1usize << r_bits {
                        let y = f(j, xj, r) % out;
                        row[y] += 1.0 / (1u64 << r_bits) as f64;
                    }
                    row
                })
                .collect()
        })
        .collect();
    tampered_joint(x, xprime_lengths, &channels)
}

/// Per-block tampering by uniformly random function tables
/// `h_j: {0,1}^{n_j + r_bits} → {0,1}^{n'_j}`.
pub fn random_per_block_tampering(
    rng: &mut impl Rng,
    x: &BlockDist,
    xprime_lengths: &[usize],
    r_bits: usize,
) -> Result<Dist> {
    let tables: Vec<Vec<usize>> = x
        .spec()
        .lengths()
        .iter()
        .enumerate()
        .map(|(j, &n_j)| {
            let out = 1usize << xprime_lengths[j];
            (0..1usize << (n_j + r_bits))
                .map(|_| rng.gen_range(0..out))
                .collect()
        })
        .collect();
    per_block_tampering(rng, x, xprime_lengths, r_bits, |j, xj, r| {
        tables[j][(xj << r_bits) | r]
    })
}

/// Assembles the dense `(X, X')` joint from per-block channels
/// `channels[j][x_j][x'_j] = Pr[X'_j = x'_j | X_j = x_j]`.
fn tampered_joint(
    x: &BlockDist,
    xprime_lengths: &[usize],
    channels: &[Vec<Vec<f64>>],
) -> Result<Dist> {
    let lengths = x.spec().lengths();
    let t = lengths.len();
    let nx = x.spec().total_bits();
    let nxp: usize = xprime_lengths.iter().sum();
    let mut probs = vec![0.0f64; 1usize << (nx + nxp)];
    for (xpart, &px) in x.joint().probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        // Decompose the source outcome into blocks (leading block first).
        let mut xs = Vec::with_capacity(t);
        let mut shift = nx;
        for &n_j in lengths {
            shift -= n_j;
            xs.push((xpart >> shift) & ((1 << n_j) - 1));
        }
        for wpart in 0..1usize << nxp {
            let mut weight = px;
            let mut wshift = nxp;
            for j in 0..t {
                wshift -= xprime_lengths[j];
                let wj = (wpart >> wshift) & ((1 << xprime_lengths[j]) - 1);
                weight *= channels[j][xs[j]][wj];
                if weight == 0.0 {
                    break;
                }
            }
            if weight > 0.0 {
                probs[(xpart << nxp) | wpart] += weight;
            }
        }
    }
    Ok(Dist::new(nx + nxp, probs)?)
}
