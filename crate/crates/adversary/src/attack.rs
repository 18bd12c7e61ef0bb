//! The two prefix-steering attacks.

use bitdist::{Dist, FunctionTable};
use blocks::{verify_block_source, BlockDist, BlockSpec};
use entropy::{c_eps, smooth_min_entropy};

use crate::{Error, Result};

/// Rounding guard on the measured-vs-bound comparison.
const CHECK_TOL: f64 = 1e-9;

/// A flat source that defeats a seedless map: it carries `n − g'` bits of
/// min-entropy exactly, yet the image's smooth min-entropy is pinned at
/// `min(n, m) − g' + c_ε` because the whole source lands in one `g'`-bit
/// output prefix.
#[derive(Clone, Debug)]
pub struct GeneralBreak {
    /// The adversarial source, uniform on `2^{n−g'}` inputs.
    pub source: Dist,
    /// The output prefix everything is steered into.
    pub sigma: usize,
    /// Width `g' = min(g, m)` of that prefix.
    pub prefix_bits: usize,
    /// Min-entropy of the source, `n − g'` (at least the promised
    /// `n − g`).
    pub floor: f64,
    /// The impossibility bound `min(n, m) − g' + c_ε`.
    pub bound: f64,
    /// Measured `H^ε(f(X))`.
    pub measured: f64,
    /// `measured ≤ bound` (up to rounding) — the attack worked.
    pub holds: bool,
}

/// A block source with per-block floors `n − g` that defeats a seedless
/// map over `t` blocks: the image is confined to one `g'`-bit prefix, so
/// its smooth min-entropy is at most `m − g' + c_ε` — and at most the
/// even tighter support bound `min(m − g', t(n − g')) + c_ε`.
#[derive(Clone, Debug)]
pub struct CgBreak {
    pub source: BlockDist,
    pub sigma: usize,
    pub prefix_bits: usize,
    /// The headline bound `m − g' + c_ε`.
    pub bound: f64,
    /// The support bound `min(m − g', t(n − g')) + c_ε`.
    pub tighter_bound: f64,
    pub measured: f64,
    /// `measured ≤ tighter_bound` (hence also `≤ bound`).
    pub holds: bool,
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::BadEps(eps));
    }
    Ok(())
}

/// The `g'`-bit output prefix hit by the most inputs, lowest value on
/// ties, together with its multiplicity. By pigeonhole the winner's count
/// is at least `(number of inputs) / 2^{g'}`.
fn popular_prefix(outputs: impl Iterator<Item = usize>, m: usize, gp: usize) -> (usize, usize) {
    let mut counts = vec![0usize; 1 << gp];
    for y in outputs {
        counts[y >> (m - gp)] += 1;
    }
    let mut sigma = 0;
    for (s, &c) in counts.iter().enumerate() {
        if c > counts[sigma] {
            sigma = s;
        }
    }
    (sigma, counts[sigma])
}

/// Builds a source with min-entropy at least `n − g` whose image under
/// `f` provably cannot be condensed beyond `min(n, m) − g' + c_ε`, where
/// `g' = min(g, m)`.
///
/// Some `g'`-bit output prefix `σ` has at least `2^{n−g'}` preimages
/// (pigeonhole). The source is uniform on the lexicographically first
/// `2^{n−g'}` of them — a flat source of min-entropy exactly `n − g'` —
/// but its image is supported on the at most `min(2^{n−g'}, 2^{m−g'})`
/// outputs with prefix `σ`. Any distribution ε-close to the image keeps
/// mass `1 − ε` on that support, so its largest point is at least
/// `(1−ε)·2^{−(min(n,m)−g')}` and `H^ε(f(X)) ≤ min(n,m) − g' + c_ε` with
/// `c_ε = log₂(1/(1−ε))`.
pub fn break_general(f: &FunctionTable, g: usize, eps: f64) -> Result<GeneralBreak> {
    validate_eps(eps)?;
    let n = f.in_bits();
    let m = f.out_bits();
    if g > n {
        return Err(Error::GTooLarge { g, n });
    }
    let gp = g.min(m);
    let (sigma, count) = popular_prefix((0..1usize << n).map(|u| f.apply(u)), m, gp);
    let want = 1usize << (n - gp);
    debug_assert!(count >= want);

    let weight = (want as f64).recip();
    let mut probs = vec![0.0; 1 << n];
    let mut taken = 0;
    for (u, slot) in probs.iter_mut().enumerate() {
        if f.apply(u) >> (m - gp) == sigma {
            *slot = weight;
            taken += 1;
            if taken == want {
                break;
            }
        }
    }
    let source = Dist::new(n, probs)?;
    let image = source.push_forward(f)?;
    let bound = (n.min(m) - gp) as f64 + c_eps(eps)?;
    let measured = smooth_min_entropy(&image, eps)?.value;
    Ok(GeneralBreak {
        source,
        sigma,
        prefix_bits: gp,
        floor: (n - gp) as f64,
        bound,
        measured,
        holds: measured <= bound + CHECK_TOL,
    })
}

/// Recursive prefix steering over `t` blocks of `n` bits: returns the
/// joint probability vector and the prefix it is steered into.
fn steer(f: &FunctionTable, t: usize, n: usize, gp: usize) -> Result<(Vec<f64>, usize)> {
    let m = f.out_bits();
    let want = 1usize << (n - gp);
    if t == 1 {
        let (sigma, count) = popular_prefix((0..1usize << n).map(|u| f.apply(u)), m, gp);
        debug_assert!(count >= want);
        let weight = (want as f64).recip();
        let mut probs = vec![0.0; 1 << n];
        let mut taken = 0;
        for (u, slot) in probs.iter_mut().enumerate() {
            if f.apply(u) >> (m - gp) == sigma {
                *slot = weight;
                taken += 1;
                if taken == want {
                    break;
                }
            }
        }
        return Ok((probs, sigma));
    }

    // Fix each value of the leading block and attack the rest.
    let rest_bits = (t - 1) * n;
    let mut sub_attacks = Vec::with_capacity(1 << n);
    for alpha in 0..1usize << n {
        let sub = FunctionTable::from_fn(rest_bits, m, |w| f.apply((alpha << rest_bits) | w))?;
        sub_attacks.push(steer(&sub, t - 1, n, gp)?);
    }
    // At least 2^{n−g'} leading values share a steered prefix
    // (pigeonhole over the 2^{g'} prefixes).
    let (sigma, count) = popular_prefix(sub_attacks.iter().map(|(_, s)| *s), gp, gp);
    debug_assert!(count >= want);

    let weight = (want as f64).recip();
    let mut probs = vec![0.0; 1usize << (t * n)];
    let mut taken = 0;
    for (alpha, (sub_probs, sub_sigma)) in sub_attacks.iter().enumerate() {
        if *sub_sigma != sigma {
            continue;
        }
        let base = alpha << rest_bits;
        for (w, &p) in sub_probs.iter().enumerate() {
            if p > 0.0 {
                probs[base | w] = p * weight;
            }
        }
        taken += 1;
        if taken == want {
            break;
        }
    }
    Ok((probs, sigma))
}

/// Builds a `t`-block source with per-block conditional floors `n − g`
/// whose image under `f` has smooth min-entropy at most `m − g' + c_ε`
/// (`g' = min(g, m)`), witnessing that block structure does not rescue a
/// map from the prefix-steering attack.
///
/// Recursion on the leading block: attack `f(α, ·)` for every value `α`,
/// keep the `2^{n−g'}` lexicographically first values of `α` whose
/// sub-attacks steer into the most popular prefix `σ` (pigeonhole), and
/// put the uniform distribution on those `α`, each continued by its
/// sub-attack source. Every conditional along the way is flat on
/// `2^{n−g'}` points, so the block floors `n − g` verify, while the
/// joint image stays inside prefix `σ`. The joint support has at most
/// `2^{t(n−g')}` points, giving the secondary bound.
pub fn break_cg(f: &FunctionTable, t: usize, g: usize, eps: f64) -> Result<CgBreak> {
    validate_eps(eps)?;
    if t == 0 {
        return Err(Error::NoBlocks);
    }
    let total = f.in_bits();
    if total % t != 0 {
        return Err(Error::UnevenBlocks { bits: total, t });
    }
    if total > 16 {
        return Err(Error::JointTooWide(total));
    }
    let n = total / t;
    if g > n {
        return Err(Error::GTooLarge { g, n });
    }
    let m = f.out_bits();
    let gp = g.min(m);

    let (probs, sigma) = steer(f, t, n, gp)?;
    let spec = BlockSpec::new(vec![n; t], vec![(n - g) as f64; t])?;
    let source = BlockDist::new(spec, Dist::new(total, probs)?)?;
    let verdict = verify_block_source(&source)?;
    debug_assert!(verdict.holds, "attack source must verify: {verdict:?}");

    let image = source.joint().push_forward(f)?;
    let ceps = c_eps(eps)?;
    let bound = (m - gp) as f64 + ceps;
    let tighter_bound = ((m - gp).min(t * (n - gp))) as f64 + ceps;
    let measured = smooth_min_entropy(&image, eps)?.value;
    Ok(CgBreak {
        source,
        sigma,
        prefix_bits: gp,
        bound,
        tighter_bound,
        measured,
        holds: measured <= tighter_bound + CHECK_TOL,
    })
}
