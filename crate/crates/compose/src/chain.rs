//! Seed-chaining: a row of verified stages plus one raw final block
//! becomes a single seedless condenser for block sources.

use bitdist::{Dist, FunctionTable};
use blocks::{verify_block_source, BlockDist};
use entropy::smooth_min_entropy;
use primitives::{CondenserParams, SeededPrimitive};

use crate::{Error, Result};

/// Rounding guard on floor comparisons.
const CHECK_TOL: f64 = 1e-9;

/// A chain to compose: stage `i` condenses block `i` using as seed the
/// output of stage `i+1`; the last stage is seeded by the final block
/// verbatim. Every stage must carry a verification record. `stages` may
/// be empty, in which case the "chain" is the final block alone.
#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub stages: Vec<SeededPrimitive>,
    /// Width of the final block (the innermost seed).
    pub final_n: usize,
    /// Entropy floor of the final block.
    pub final_k: f64,
}

/// The composed condenser: one table over the concatenated blocks, its
/// parameter sheet, and the block spec it is promised on.
#[derive(Clone, Debug)]
pub struct ComposedChain {
    /// Sheet of the composed map: `n = Σ nᵢ`, `d = 0`, `m = m₁`,
    /// `k = Σ kᵢ`, and `eps` is the accumulated error.
    pub params: CondenserParams,
    /// The composed map, blocks packed leading-block-highest.
    pub table: FunctionTable,
    /// Block widths, stages first, final block last.
    pub lengths: Vec<usize>,
    /// Entropy floors the guarantee is conditioned on (stage `i`'s
    /// verified level, then the final block's floor).
    pub floors: Vec<f64>,
    /// Per-position output gap: `mᵢ − k′ᵢ` for stage `i`, and
    /// `final_n − final_k` for the last entry. The sheet's `gap` is their
    /// sum.
    pub stage_gaps: Vec<f64>,
}

/// Outcome of running a composed chain on a concrete block source.
#[derive(Clone, Debug)]
pub struct ChainEvalOutcome {
    pub output: Dist,
    pub guaranteed_k: f64,
    pub guaranteed_eps: f64,
    pub measured: f64,
    pub holds: bool,
}

/// Composes a seed chain. Stage `i`'s seed width must equal stage
/// `i+1`'s output width, and the last stage's seed width must equal the
/// final block's width.
///
/// Walking from the innermost block outward, the running guarantee is a
/// pair (deficit `G`, error `E`) for the current seed: the final block
/// starts it at `G = final_n − final_k`, `E = 0`, and stage `i` (gap
/// `gᵢ = mᵢ − k′ᵢ`, error `εᵢ`) turns a `(G, E)` seed into a
/// `(gᵢ + G, E + 2^G εᵢ)` output — the deficient-seed rule of
/// [`crate::eval_on_block`], with the incoming smoothing error carried
/// along unchanged (replacing the seed by its witness changes the output
/// law by at most `E` in statistical distance). The sheet therefore
/// reports `gap = Σ gᵢ`, `eps = Σᵢ εᵢ·2^{Σ_{j>i} gⱼ}`, and
/// `k′ = m₁ − gap`.
pub fn compose_chain(cfg: &ChainConfig) -> Result<ComposedChain> {
    if cfg.final_n == 0 {
        return Err(Error::EmptyFinalBlock);
    }
    if !cfg.final_k.is_finite() || cfg.final_k < 0.0 || cfg.final_k > cfg.final_n as f64 {
        return Err(Error::BadFinalFloor {
            k: cfg.final_k,
            n: cfg.final_n,
        });
    }
    let s = cfg.stages.len();
    for (i, stage) in cfg.stages.iter().enumerate() {
        if stage.verified().is_none() {
            return Err(Error::Unverified);
        }
        let d = stage.params().d;
        if i + 1 < s {
            let m_next = cfg.stages[i + 1].params().m;
            if d != m_next {
                return Err(Error::SeamMismatch {
                    stage: i,
                    next: i + 1,
                    d,
                    m: m_next,
                });
            }
        } else if d != cfg.final_n {
            return Err(Error::LastSeedMismatch {
                d,
                n: cfg.final_n,
            });
        }
    }

    let mut lengths: Vec<usize> = cfg.stages.iter().map(|f| f.params().n).collect();
    lengths.push(cfg.final_n);
    let mut floors: Vec<f64> = cfg
        .stages
        .iter()
        .map(|f| f.verified().expect("checked above").k as f64)
        .collect();
    floors.push(cfg.final_k);

    // Innermost block outward: accumulate deficit and error.
    let mut stage_gaps = vec![0.0; s + 1];
    stage_gaps[s] = cfg.final_n as f64 - cfg.final_k;
    let mut deficit = stage_gaps[s];
    let mut error = 0.0f64;
    for i in (0..s).rev() {
        let record = cfg.stages[i].verified().expect("checked above");
        error += deficit.exp2() * record.error;
        stage_gaps[i] = cfg.stages[i].params().m as f64 - record.k_prime;
        deficit += stage_gaps[i];
    }
    let error = error.min(1.0);

    let n_total: usize = lengths.iter().sum();
    let m_out = if s == 0 {
        cfg.final_n
    } else {
        cfg.stages[0].params().m
    };
    let table = FunctionTable::from_fn(n_total, m_out, |u| {
        let mut y = u & ((1usize << cfg.final_n) - 1);
        let mut shift = cfg.final_n;
        for i in (0..s).rev() {
            let p = cfg.stages[i].params();
            let x_i = (u >> shift) & ((1usize << p.n) - 1);
            y = cfg.stages[i].eval(x_i, y);
            shift += p.n;
        }
        y
    })?;

    let k_total: f64 = floors.iter().sum();
    let k_prime = m_out as f64 - deficit;
    let params = CondenserParams::new(n_total, 0, m_out, k_total, k_total - k_prime, error)?;
    Ok(ComposedChain {
        params,
        table,
        lengths,
        floors,
        stage_gaps,
    })
}

/// Runs a composed chain on a block source matching its spec (floors may
/// exceed the chain's requirements) and compares the measured smooth
/// min-entropy of the output against the composed guarantee.
pub fn eval_chain_on_block(chain: &ComposedChain, x: &BlockDist) -> Result<ChainEvalOutcome> {
    let spec = x.spec();
    if spec.lengths() != chain.lengths.as_slice() {
        return Err(Error::ChainLengths {
            expected: chain.lengths.clone(),
            got: spec.lengths().to_vec(),
        });
    }
    for (index, (&got, &expected)) in spec.floors().iter().zip(&chain.floors).enumerate() {
        if got < expected - CHECK_TOL {
            return Err(Error::ChainFloor {
                index,
                expected,
                got,
            });
        }
    }
    let verdict = verify_block_source(x)?;
    if !verdict.holds {
        let (index, margin) = verdict
            .margins
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("a spec has at least one block");
        return Err(Error::NotBlockSource { index, margin });
    }

    let output = x.joint().push_forward(&chain.table)?;
    let guaranteed_k = chain.params.k_prime;
    let guaranteed_eps = chain.params.eps;
    let measured = smooth_min_entropy(&output, guaranteed_eps)?.value;
    Ok(ChainEvalOutcome {
        output,
        guaranteed_k,
        guaranteed_eps,
        measured,
        holds: measured >= guaranteed_k - CHECK_TOL,
    })
}
