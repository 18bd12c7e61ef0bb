//! File loading, cache plumbing and the CLI error currency.
//!
//! Everything that is not a verdict — unreadable files, malformed JSON,
//! domain errors bubbling out of the libraries — becomes a [`CliError`]
//! whose message names what was wrong, and the binary exits with code 2.

use std::fs;
use std::path::{Path, PathBuf};

use bitdist::{Dist, FunctionTable};
use blocks::{BlockDist, BlockSpec};
use compose::ChainConfig;
use primitives::SeededPrimitive;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::report::sha256_hex;

#[derive(Debug)]
pub struct CliError {
    pub msg: String,
}

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self { msg: msg.into() }
    }
}

macro_rules! wrap_errors {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError { msg: e.to_string() }
            }
        })*
    };
}

wrap_errors!(
    bitdist::Error,
    entropy::Error,
    blocks::Error,
    primitives::Error,
    compose::Error,
    nonmal::Error,
    existential::Error,
    adversary::Error,
);

pub type Result<T> = std::result::Result<T, CliError>;

/// A parsed input file together with the SHA-256 of its raw bytes; the
/// hash stands in for the path in canonical report parameters, so reports
/// depend on content, never on filesystem layout.
pub struct Loaded<T> {
    pub value: T,
    pub sha256: String,
}

fn read_bytes(flag: &str, path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::new(format!("--{flag} {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(flag: &str, path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes)
        .map_err(|e| CliError::new(format!("--{flag} {}: {e}", path.display())))
}

pub fn load<T: for<'de> Deserialize<'de>>(flag: &str, path: &Path) -> Result<Loaded<T>> {
    let bytes = read_bytes(flag, path)?;
    Ok(Loaded {
        value: parse(flag, path, &bytes)?,
        sha256: sha256_hex(&bytes),
    })
}

pub fn load_dist(flag: &str, path: &Path) -> Result<Loaded<Dist>> {
    load(flag, path)
}

pub fn load_table(flag: &str, path: &Path) -> Result<Loaded<FunctionTable>> {
    load(flag, path)
}

/// Block sources travel as one flat object:
/// `{"lengths": [...], "floors": [...], "joint": {"n_bits": ..., "probs": [...]}}`.
#[derive(Deserialize)]
struct FlatBlock {
    lengths: Vec<usize>,
    floors: Vec<f64>,
    joint: Dist,
}

pub fn load_block(flag: &str, path: &Path) -> Result<Loaded<BlockDist>> {
    let raw: Loaded<FlatBlock> = load(flag, path)?;
    let spec = BlockSpec::new(raw.value.lengths, raw.value.floors)?;
    Ok(Loaded {
        value: BlockDist::new(spec, raw.value.joint)?,
        sha256: raw.sha256,
    })
}

fn primitive_from_value(ctx: &str, v: Value) -> Result<SeededPrimitive> {
    // Accept both the bare primitive and the `{"primitive": ..., "rng_seed": ...}`
    // wrapper that `search` persists.
    let inner = match v {
        Value::Object(ref map) if map.contains_key("primitive") => {
            map.get("primitive").cloned().expect("key checked")
        }
        other => other,
    };
    serde_json::from_value(inner).map_err(|e| CliError::new(format!("{ctx}: {e}")))
}

/// Chain files reference their stages three ways:
/// `{"cache": "<key>"}`, `{"file": "<path>"}` (relative to the chain
/// file), or `{"primitive": { ... }}` inline.
fn resolve_stage(
    ctx: &str,
    base: &Path,
    stage: &Value,
    cache_dir: Option<&Path>,
) -> Result<SeededPrimitive> {
    if let Some(key) = stage.get("cache") {
        let key = key
            .as_str()
            .ok_or_else(|| CliError::new(format!("{ctx}: \"cache\" must be a string key")))?;
        let dir = cache_dir.ok_or_else(|| {
            CliError::new(format!(
                "{ctx}: \"cache\" reference needs --cache or ENTROPY_FORGE_CACHE"
            ))
        })?;
        let file = dir.join(format!("{key}.json"));
        let bytes = fs::read(&file)
            .map_err(|e| CliError::new(format!("{ctx}: cache entry {}: {e}", file.display())))?;
        let v: Value = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::new(format!("{ctx}: cache entry {}: {e}", file.display())))?;
        return primitive_from_value(ctx, v);
    }
    if let Some(rel) = stage.get("file") {
        let rel = rel
            .as_str()
            .ok_or_else(|| CliError::new(format!("{ctx}: \"file\" must be a path string")))?;
        let mut path = PathBuf::from(rel);
        if path.is_relative() {
            path = base.parent().unwrap_or_else(|| Path::new(".")).join(path);
        }
        let bytes = fs::read(&path)
            .map_err(|e| CliError::new(format!("{ctx}: {}: {e}", path.display())))?;
        let v: Value = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::new(format!("{ctx}: {}: {e}", path.display())))?;
        return primitive_from_value(ctx, v);
    }
    if let Some(p) = stage.get("primitive") {
        return primitive_from_value(ctx, p.clone());
    }
    Err(CliError::new(format!(
        "{ctx}: each stage needs \"cache\", \"file\", or \"primitive\""
    )))
}

#[derive(Deserialize)]
struct RawChain {
    stages: Vec<Value>,
    final_n: usize,
    final_k: f64,
}

fn chain_from_value(
    ctx: &str,
    base: &Path,
    v: Value,
    cache_dir: Option<&Path>,
) -> Result<ChainConfig> {
    let raw: RawChain =
        serde_json::from_value(v).map_err(|e| CliError::new(format!("{ctx}: {e}")))?;
    let mut stages = Vec::with_capacity(raw.stages.len());
    for (i, stage) in raw.stages.iter().enumerate() {
        stages.push(resolve_stage(
            &format!("{ctx}: stages[{i}]"),
            base,
            stage,
            cache_dir,
        )?);
    }
    Ok(ChainConfig {
        stages,
        final_n: raw.final_n,
        final_k: raw.final_k,
    })
}

pub fn load_chain(flag: &str, path: &Path, cache_dir: Option<&Path>) -> Result<Loaded<ChainConfig>> {
    let bytes = read_bytes(flag, path)?;
    let v: Value = parse(flag, path, &bytes)?;
    let ctx = format!("--{flag} {}", path.display());
    Ok(Loaded {
        value: chain_from_value(&ctx, path, v, cache_dir)?,
        sha256: sha256_hex(&bytes),
    })
}

/// Pipeline schedule file:
/// `{"baseline": {"table": ..., "blocks": ..., "rows": ..., "row_bits": ...,
///   "row_entropy": ..., "error": ...}, "rounds": [{"b": ..., "eps": ...}],
///   "post": <chain> | null}`.
#[derive(Deserialize)]
pub struct BaselineFile {
    pub table: FunctionTable,
    pub blocks: usize,
    pub rows: usize,
    pub row_bits: usize,
    pub row_entropy: f64,
    pub error: f64,
}

#[derive(Deserialize)]
pub struct RoundFile {
    pub b: usize,
    pub eps: f64,
}

#[derive(Deserialize)]
struct RawSchedule {
    baseline: BaselineFile,
    #[serde(default)]
    rounds: Vec<RoundFile>,
    #[serde(default)]
    post: Option<Value>,
}

pub struct ScheduleFile {
    pub baseline: BaselineFile,
    pub rounds: Vec<RoundFile>,
    pub post: Option<ChainConfig>,
}

pub fn load_schedule(
    flag: &str,
    path: &Path,
    cache_dir: Option<&Path>,
) -> Result<Loaded<ScheduleFile>> {
    let bytes = read_bytes(flag, path)?;
    let raw: RawSchedule = parse(flag, path, &bytes)?;
    let post = match raw.post {
        None | Some(Value::Null) => None,
        Some(v) => Some(chain_from_value(
            &format!("--{flag} {}: post", path.display()),
            path,
            v,
            cache_dir,
        )?),
    };
    Ok(Loaded {
        value: ScheduleFile {
            baseline: raw.baseline,
            rounds: raw.rounds,
            post,
        },
        sha256: sha256_hex(&bytes),
    })
}

pub fn cache_lookup(dir: &Path, key: &str) -> Result<Option<SeededPrimitive>> {
    let file = dir.join(format!("{key}.json"));
    let bytes = match fs::read(&file) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => {
            return Err(CliError::new(format!(
                "cache entry {}: {e}",
                file.display()
            )))
        }
    };
    let v: Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::new(format!("cache entry {}: {e}", file.display())))?;
    primitive_from_value(&format!("cache entry {}", file.display()), v).map(Some)
}

pub fn cache_store(dir: &Path, key: &str, p: &SeededPrimitive, rng_seed: u64) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::new(format!("cache dir {}: {e}", dir.display())))?;
    let file = dir.join(format!("{key}.json"));
    let body = serde_json::to_string_pretty(&json!({"primitive": p, "rng_seed": rng_seed}))
        .expect("primitives serialize");
    fs::write(&file, body)
        .map_err(|e| CliError::new(format!("cache entry {}: {e}", file.display())))
}

pub fn write_json(flag: &str, path: &Path, v: &Value) -> Result<()> {
    let body = serde_json::to_string_pretty(v).expect("report values serialize");
    fs::write(path, body).map_err(|e| CliError::new(format!("--{flag} {}: {e}", path.display())))
}
