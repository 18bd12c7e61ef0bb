//! End-to-end purification pipelines on a concrete block source.
//!
//! A pipeline spends the blocks of its input from the back: a baseline
//! table turns the trailing blocks into a first row table, each
//! purification round burns two groups of blocks as the fresh `(X, Y)`
//! pair while the rows halve, and an optional seed chain consumes the
//! remaining leading blocks once a single row is left. Everything is
//! evaluated exactly — each stage is a composed function of the full
//! input, pushed forward through the true joint — while the claims
//! (row entropy, accumulated error) ride along and are measured against
//! the hull distance or the best-row entropy at every stage.

use bitdist::{Dist, FunctionTable};
use blocks::{BlockDist, BlockSpec};
use compose::{compose_chain, eval_chain_on_block, ChainConfig};

use crate::{hull_distance, purify_step, Error, NmCondenser, PurifyInput, Result, SomewhereSource};

/// Rounding guard on entropy and error comparisons.
const CHECK_TOL: f64 = 1e-9;

/// One purification round: which condenser to run and how many input
/// blocks each of its two fresh sources (`X`, then `Y`) consumes.
#[derive(Clone, Debug)]
pub struct PurifyRound {
    pub nm: NmCondenser,
    pub blocks_each: usize,
}

/// Full pipeline description. `baseline` reads the trailing
/// `base_blocks` blocks and emits the starting table of `rows` rows of
/// `row_bits` bits, claimed to be within `baseline_error` of a
/// somewhere-source with a `row_entropy`-good row. Rounds follow, then
/// optionally a seed chain over the untouched leading blocks with the
/// final row as its innermost seed.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub base_blocks: usize,
    pub baseline: FunctionTable,
    pub rows: usize,
    pub row_bits: usize,
    pub row_entropy: f64,
    pub baseline_error: f64,
    pub rounds: Vec<PurifyRound>,
    pub post: Option<ChainConfig>,
}

/// What one stage promised and what it measured.
#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    pub stage: String,
    pub rows: usize,
    pub row_bits: usize,
    pub claimed_row_entropy: f64,
    pub claimed_error: f64,
    /// Best-row smooth min-entropy at the claimed error.
    pub measured_best_row: f64,
    /// True when the claim promises nothing: error at least one, or a
    /// zero entropy floor.
    pub vacuous: bool,
    /// Exact hull distance at the claimed rate, when the program fits
    /// under [`crate::LP_SIZE_CAP`].
    pub hull: Option<f64>,
    /// Hull distance within the claimed error when available, otherwise
    /// best row meeting the claimed floor.
    pub holds: bool,
}

/// Stage-by-stage account of one pipeline run.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
    /// Blocks consumed by the baseline and the rounds (the seed chain
    /// reads whatever is left).
    pub consumed_blocks: usize,
    pub final_bits: usize,
}

/// Runs a pipeline on a concrete block source and reports per stage.
pub fn toy_pipeline(input: &BlockDist, cfg: &PipelineConfig) -> Result<(Dist, PipelineReport)> {
    let lengths = input.spec().lengths().to_vec();
    let floors = input.spec().floors().to_vec();
    let t = lengths.len();
    let post_blocks = cfg.post.as_ref().map_or(0, |p| p.stages.len());
    let tau: usize = cfg.base_blocks + 2 * cfg.rounds.iter().map(|r| r.blocks_each).sum::<usize>();
    if tau + post_blocks != t {
        return Err(Error::ScheduleBlocks {
            need: tau + post_blocks,
            have: t,
        });
    }
    if cfg.rows == 0 || !cfg.rows.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(cfg.rows));
    }
    if !cfg.row_entropy.is_finite() || cfg.row_entropy < 0.0 || cfg.row_entropy > cfg.row_bits as f64
    {
        return Err(Error::BadRowEntropy {
            claimed: cfg.row_entropy,
            row_bits: cfg.row_bits,
        });
    }
    if !cfg.baseline_error.is_finite() || cfg.baseline_error < 0.0 {
        return Err(Error::BadError(cfg.baseline_error));
    }

    // suffix[i] = bits in blocks i.. ; block range [a, b) occupies bits
    // [suffix[b], suffix[a]) counted from the least significant end.
    let mut suffix = vec![0usize; t + 1];
    for i in (0..t).rev() {
        suffix[i] = suffix[i + 1] + lengths[i];
    }
    let total_bits = suffix[0];

    let base_in = suffix[t - cfg.base_blocks];
    let base_out = cfg.rows * cfg.row_bits;
    if cfg.baseline.in_bits() != base_in || cfg.baseline.out_bits() != base_out {
        return Err(Error::TableShape {
            want_in: base_in,
            want_out: base_out,
            got_in: cfg.baseline.in_bits(),
            got_out: cfg.baseline.out_bits(),
        });
    }

    // Dry run over the schedule: widths and row counts, no probability.
    let mut cursor = t - cfg.base_blocks;
    let mut dry_rows = cfg.rows;
    let mut spans = Vec::new();
    for (idx, round) in cfg.rounds.iter().enumerate() {
        let b = round.blocks_each;
        let y_bits = suffix[cursor - b] - suffix[cursor];
        let x_bits = suffix[cursor - 2 * b] - suffix[cursor - b];
        if x_bits != round.nm.n_x() {
            return Err(Error::RoundWidth {
                round: idx,
                expected: round.nm.n_x(),
                got: x_bits,
            });
        }
        if y_bits != round.nm.n_y() {
            return Err(Error::RoundWidth {
                round: idx,
                expected: round.nm.n_y(),
                got: y_bits,
            });
        }
        if dry_rows <= 1 {
            return Err(Error::SingleRow);
        }
        spans.push((suffix[cursor], suffix[cursor - b]));
        cursor -= 2 * b;
        dry_rows /= 2;
    }
    if let Some(post) = &cfg.post {
        if dry_rows != 1 {
            return Err(Error::PostRows(dry_rows));
        }
        let final_w = cfg
            .rounds
            .last()
            .map_or(cfg.row_bits, |round| round.nm.m());
        if post.final_n != final_w {
            return Err(Error::PostWidth {
                expected: final_w,
                got: post.final_n,
            });
        }
    }

    // The composed table: stage value as an exact function of the whole
    // input string.
    let joint = input.joint();
    let states = 1usize << total_bits;
    let mut table: Vec<usize> = (0..states)
        .map(|u| cfg.baseline.apply(u & ((1usize << base_in) - 1)))
        .collect();
    let mut cur_rows = cfg.rows;
    let mut cur_w = cfg.row_bits;
    let mut ell = cfg.row_entropy;
    let mut err = cfg.baseline_error;

    let mut stages = Vec::new();
    let stage_report = |name: String,
                        rows_now: usize,
                        w_now: usize,
                        ell_now: f64,
                        err_now: f64,
                        table_now: &[usize]|
     -> Result<StageReport> {
        let width = rows_now * w_now;
        let slice = FunctionTable::new(total_bits, width, table_now.to_vec())?;
        let dist = joint.push_forward(&slice)?;
        let source = SomewhereSource::new(rows_now, w_now, dist.clone(), ell_now)?;
        let (_, best) = source.best_row(err_now)?;
        let hull = match hull_distance(&dist, rows_now, ell_now) {
            Ok(d) => Some(d),
            Err(Error::LpTooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        let holds = match hull {
            Some(d) => d <= err_now + CHECK_TOL,
            None => best + CHECK_TOL >= ell_now,
        };
        Ok(StageReport {
            stage: name,
            rows: rows_now,
            row_bits: w_now,
            claimed_row_entropy: ell_now,
            claimed_error: err_now,
            measured_best_row: best,
            vacuous: err_now >= 1.0 || ell_now <= 0.0,
            hull,
            holds,
        })
    };
    stages.push(stage_report(
        "baseline".into(),
        cur_rows,
        cur_w,
        ell,
        err,
        &table,
    )?);

    for (idx, round) in cfg.rounds.iter().enumerate() {
        let (y_lo, x_lo) = spans[idx];
        let nm = &round.nm;
        let (n_x, n_y) = (nm.n_x(), nm.n_y());
        let x_of = |u: usize| (u >> x_lo) & ((1usize << n_x) - 1);
        let y_of = |u: usize| (u >> y_lo) & ((1usize << n_y) - 1);

        // The lemma's view of this round: the (X, Y, rows) marginal.
        let tbl = &table;
        let purify_view = FunctionTable::from_fn(total_bits, n_x + n_y + cur_rows * cur_w, |u| {
            (((x_of(u) << n_y) | y_of(u)) << (cur_rows * cur_w)) | tbl[u]
        })?;
        let out = purify_step(
            nm,
            &PurifyInput {
                joint: joint.push_forward(&purify_view)?,
                rows: cur_rows,
                row_bits: cur_w,
                claimed_row_entropy: ell,
                claimed_error: err,
            },
        )?;

        // Advance the composed table with the same fold.
        let half = cur_rows / 2;
        let m = nm.m();
        let row_mask = (1usize << cur_w) - 1;
        table = (0..states)
            .map(|u| {
                let (x, y, told) = (x_of(u), y_of(u), table[u]);
                let mut new = 0usize;
                for j in 0..half {
                    let t_even = (told >> ((cur_rows - 1 - 2 * j) * cur_w)) & row_mask;
                    let t_odd = (told >> ((cur_rows - 2 - 2 * j) * cur_w)) & row_mask;
                    let r = nm.eval(x, y, t_even, cur_w, 1).expect("widths validated")
                        ^ nm.eval(x, y, t_odd, cur_w, 2).expect("widths validated");
                    new = (new << m) | r;
                }
                new
            })
            .collect();
        cur_rows = half;
        cur_w = m;
        ell = out.source.claimed_row_entropy();
        err = out.claimed_error;
        stages.push(stage_report(
            format!("purify round {}", idx + 1),
            cur_rows,
            cur_w,
            ell,
            err,
            &table,
        )?);
    }

    let final_dist;
    let final_bits;
    if let Some(post) = &cfg.post {
        // Leading blocks plus the single surviving row form the block
        // source the seed chain runs on, with the current claim as the
        // final block's floor.
        let p = post.stages.len();
        let lead_bits = total_bits - suffix[p];
        let tbl = &table;
        let view = FunctionTable::from_fn(total_bits, lead_bits + cur_w, |u| {
            ((u >> suffix[p]) << cur_w) | tbl[u]
        })?;
        let post_joint = joint.push_forward(&view)?;
        let mut post_lengths = lengths[..p].to_vec();
        post_lengths.push(cur_w);
        let mut post_floors = floors[..p].to_vec();
        post_floors.push(ell);
        let block = BlockDist::new(BlockSpec::new(post_lengths, post_floors)?, post_joint)?;
        let chain = compose_chain(post)?;
        let outcome = eval_chain_on_block(&chain, &block)?;
        let claimed_err = err + outcome.guaranteed_eps;
        stages.push(StageReport {
            stage: "post chain".into(),
            rows: 1,
            row_bits: outcome.output.n_bits(),
            claimed_row_entropy: outcome.guaranteed_k,
            claimed_error: claimed_err,
            measured_best_row: outcome.measured,
            vacuous: claimed_err >= 1.0 || outcome.guaranteed_k <= 0.0,
            hull: None,
            holds: outcome.holds,
        });
        final_bits = outcome.output.n_bits();
        final_dist = outcome.output;
    } else {
        let width = cur_rows * cur_w;
        let slice = FunctionTable::new(total_bits, width, table)?;
        final_dist = joint.push_forward(&slice)?;
        final_bits = width;
    }

    Ok((
        final_dist,
        PipelineReport {
            stages,
            consumed_blocks: tau,
            final_bits,
        },
    ))
}
