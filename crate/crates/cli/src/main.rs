//! entropy-forge: a desk-scale laboratory for randomness condensers.
//!
//! Every subcommand computes exact (or exactly-bounded) quantities on
//! small bit-string distributions and emits a deterministic report whose
//! canonical hash depends only on (command, params, rng_seed, results,
//! tool_version). Exit codes: 0 all verdicts pass, 1 some verdict fails,
//! 2 usage or input-file error.

mod cmd;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use report::Format;

#[derive(Parser)]
#[command(name = "entropy-forge", version, about, max_term_width = 80)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// RNG seed for anything randomized; identical seeds reproduce
    /// reports bit for bit.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the report here instead of stdout (prints a one-line
    /// summary with the canonical hash).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report serialization.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Cache directory for searched primitives (the ENTROPY_FORGE_CACHE
    /// environment variable overrides this flag).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    /// Worker threads for parallel verification and trials; 0 keeps the
    /// library default. Never affects results.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact smooth min-entropy of a distribution file.
    Entropy {
        /// Distribution JSON: {"n_bits": ..., "probs": [...]}.
        #[arg(long)]
        dist: PathBuf,
        /// Smoothing parameter.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Verify a seeded table as a k-extractor against an error target.
    VerifyExt {
        /// Function table JSON over n+d input bits, seed in the low d.
        #[arg(long)]
        table: PathBuf,
        /// Seed width.
        #[arg(long)]
        d: usize,
        /// Input min-entropy level (integral: flat sources are
        /// enumerated through their support size).
        #[arg(long)]
        k: usize,
        /// Error target the verdict is judged against.
        #[arg(long)]
        eps: f64,
        /// Enumerate every output set (needs m <= 4) instead of the
        /// certified heavy-prefix family.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Verify a seeded table as a (k, k')-condenser.
    VerifyCond {
        /// Function table JSON over n+d input bits, seed in the low d.
        #[arg(long)]
        table: PathBuf,
        /// Seed width.
        #[arg(long)]
        d: usize,
        /// Input min-entropy level (integral).
        #[arg(long)]
        k: usize,
        /// Output entropy floor the error is measured against.
        #[arg(long)]
        k_prime: f64,
        /// Error target the verdict is judged against.
        #[arg(long)]
        eps: f64,
        /// Enumerate every output set (needs m <= 4).
        #[arg(long)]
        exhaustive: bool,
    },
    /// Randomized search for a passing seeded primitive, with caching.
    Search {
        /// Source width.
        #[arg(long)]
        n: usize,
        /// Seed width.
        #[arg(long)]
        d: usize,
        /// Output width.
        #[arg(long)]
        m: usize,
        /// Input min-entropy level (integral).
        #[arg(long)]
        k: f64,
        /// Entropy loss; the output floor is k' = k - loss.
        #[arg(long, default_value_t = 0.0)]
        loss: f64,
        /// Error the candidate must measure within.
        #[arg(long)]
        eps: f64,
        /// Random tables to try before giving up.
        #[arg(long, default_value_t = 1000)]
        budget: u64,
        /// Verify candidates by exhaustive set enumeration (needs m <= 4).
        #[arg(long)]
        exhaustive_verify: bool,
    },
    /// Compose a seed chain and evaluate it on a block source.
    Compose {
        /// Chain JSON: {"stages": [{"cache"|"file"|"primitive": ...}],
        /// "final_n": ..., "final_k": ...}.
        #[arg(long)]
        chain: PathBuf,
        /// Block-source JSON: {"lengths": [...], "floors": [...],
        /// "joint": {...}}.
        #[arg(long)]
        block: PathBuf,
        /// Also write the composed table here as FunctionTable JSON.
        #[arg(long)]
        out_table: Option<PathBuf>,
    },
    /// Adversarial non-malleability test of the shipped condenser.
    NmVerify {
        /// Joint (X, Y, Z1, Z2) as distribution JSON, packed MSB-first.
        #[arg(long)]
        joint: PathBuf,
        /// Width of each tampering channel.
        #[arg(long)]
        z_bits: usize,
        /// Which channel is honest (1 or 2).
        #[arg(long)]
        good: u8,
        /// Loosen branch 1's error budget (never below the shipped
        /// nominal).
        #[arg(long)]
        eps1: Option<f64>,
        /// Loosen branch 2's error budget.
        #[arg(long)]
        eps2: Option<f64>,
    },
    /// Run a purification pipeline on a block source.
    Purify {
        /// Block-source JSON the pipeline consumes.
        #[arg(long)]
        input: PathBuf,
        /// Pipeline schedule JSON: {"baseline": {...}, "rounds":
        /// [{"b": ..., "eps": ...}], "post": <chain>|null}. Rounds run
        /// the shipped condenser with budgets floored at its nominal.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Use the house schedule: six 3-bit blocks, searched two-row
        /// baseline, one purifying round.
        #[arg(long)]
        shipped: bool,
    },
    /// Monte-Carlo test of the explicit existential failure bounds.
    McExistential {
        /// Source width; trials push the uniform n-bit source through
        /// random tables.
        #[arg(long)]
        n: usize,
        /// Source min-entropy the bounds assume.
        #[arg(long)]
        k: f64,
        /// Entropy loss; the target floor is k' = k - l.
        #[arg(long)]
        l: f64,
        /// Output entropy gap; the output width is m = (k - l) + g.
        #[arg(long)]
        g: f64,
        /// Smoothing/error parameter.
        #[arg(long)]
        eps: f64,
        /// Number of random tables to sample.
        #[arg(long)]
        trials: u64,
    },
    /// Closed-form bound evaluation and inequality grids.
    Bounds {
        /// Check the three phi inequality families on a grid.
        #[arg(long)]
        phi_grid: bool,
        /// Points per grid axis for --phi-grid.
        #[arg(long, default_value_t = 100)]
        grid_points: usize,
        /// Evaluate the first explicit tail bound (needs --eps --k --l
        /// --g).
        #[arg(long)]
        part1: bool,
        /// Evaluate the second explicit tail bound (needs --eps --k --l
        /// --g).
        #[arg(long)]
        part2: bool,
        /// Evaluate the tail exponent psi (needs --eps --k --l --g --c).
        #[arg(long)]
        psi: bool,
        /// Evaluate the multiblock gap bound (needs --lengths --floors
        /// --ell --tau --eps --c).
        #[arg(long)]
        multiblock: bool,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        g: Option<f64>,
        /// Caller-supplied constant for --psi and --multiblock.
        #[arg(long)]
        c: Option<f64>,
        /// Comma-separated block widths for --multiblock.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<usize>,
        /// Comma-separated per-block floors for --multiblock.
        #[arg(long, value_delimiter = ',')]
        floors: Vec<f64>,
        /// Per-block loss for --multiblock.
        #[arg(long)]
        ell: Option<f64>,
        /// Stability parameter for --multiblock.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Construct and verify an adversarial source against a table.
    Impossible {
        /// Function table JSON of the map under attack.
        #[arg(long)]
        table: PathBuf,
        /// Entropy deficiency of the adversarial source.
        #[arg(long)]
        g: usize,
        /// Smoothing parameter of the measured output entropy.
        #[arg(long)]
        eps: f64,
        /// Attack the table as a map over t equal blocks, producing a
        /// verified CG source (needs --t).
        #[arg(long)]
        cg: bool,
        /// Block count for --cg.
        #[arg(long)]
        t: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Ignore the error when a pool already exists: results never
        // depend on thread count.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let cache_dir = std::env::var_os("ENTROPY_FORGE_CACHE")
        .map(PathBuf::from)
        .or_else(|| cli.cache.clone());

    let started = report::unix_now();
    let clock = Instant::now();
    match cmd::run(&cli.cmd, cli.seed, cache_dir.as_deref()) {
        Ok(outcome) => {
            let rep =
                report::Report::assemble(outcome, cli.seed, started, clock.elapsed().as_secs_f64());
            match report::emit(&rep, cli.format, cli.out.as_deref()) {
                Ok(()) if rep.passed => ExitCode::SUCCESS,
                Ok(()) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {}", e.msg);
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(2)
        }
    }
}
