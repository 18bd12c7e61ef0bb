//! Deterministic report assembly, canonical hashing, and emission.
//!
//! The canonical core of a report is `{command, params, rng_seed,
//! results, tool_version}`. Its serialization is byte-identical across
//! runs with the same inputs: `serde_json` maps are sorted (BTreeMap
//! keys), floats render through the shortest-roundtrip formatter, and
//! timestamps live outside the core. The report's `canonical_hash` is
//! the SHA-256 of that serialization.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::io::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// What a subcommand hands back: its canonical parameter map (file
/// arguments replaced by content hashes), its structured results, and
/// the verdict that decides the exit code.
pub struct Outcome {
    pub command: &'static str,
    pub params: Map<String, Value>,
    pub results: Value,
    pub passed: bool,
    /// Execution details that may differ between identical runs (cache
    /// hits, and the like). Emitted, but excluded from the canonical
    /// hash, like the timestamps.
    pub extra: Map<String, Value>,
}

pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub rng_seed: u64,
    pub results: Value,
    pub tool_version: String,
    pub passed: bool,
    pub extra: Map<String, Value>,
    pub canonical_hash: String,
    pub started_unix: u64,
    pub elapsed_seconds: f64,
}

/// JSON number, except that non-finite values become strings — the JSON
/// data model has no infinities, and silently nulling them (serde_json's
/// default) would corrupt reports that legitimately carry `+∞` margins.
pub fn num(f: f64) -> Value {
    if f.is_finite() {
        Value::from(f)
    } else {
        Value::String(f.to_string())
    }
}

pub fn nums(fs: &[f64]) -> Value {
    Value::Array(fs.iter().map(|&f| num(f)).collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Canonical serialization: compact JSON with sorted object keys.
pub fn canonical(v: &Value) -> String {
    serde_json::to_string(v).expect("report values serialize")
}

impl Report {
    pub fn assemble(outcome: Outcome, rng_seed: u64, started_unix: u64, elapsed: f64) -> Report {
        let core = json!({
            "command": outcome.command,
            "params": Value::Object(outcome.params.clone()),
            "rng_seed": rng_seed,
            "results": outcome.results,
            "tool_version": env!("CARGO_PKG_VERSION"),
        });
        let canonical_hash = sha256_hex(canonical(&core).as_bytes());
        let Value::Object(mut map) = core else {
            unreachable!("core is an object literal")
        };
        let results = map.remove("results").expect("inserted above");
        Report {
            command: outcome.command.to_string(),
            params: outcome.params,
            rng_seed,
            results,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            passed: outcome.passed,
            extra: outcome.extra,
            canonical_hash,
            started_unix,
            elapsed_seconds: elapsed,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "command": self.command,
            "params": Value::Object(self.params.clone()),
            "rng_seed": self.rng_seed,
            "results": self.results,
            "tool_version": self.tool_version,
            "passed": self.passed,
            "canonical_hash": self.canonical_hash,
            "started_unix": self.started_unix,
            "elapsed_seconds": num(self.elapsed_seconds),
        });
        if !self.extra.is_empty() {
            v["extra"] = Value::Object(self.extra.clone());
        }
        v
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => csv_escape(s),
        other => csv_escape(&canonical(other)),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, item, out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), item, out);
            }
        }
        scalar => out.push((prefix.to_string(), csv_value(scalar))),
    }
}

/// The Monte-Carlo experiment's CSV row, in its fixed column order.
const MC_COLUMNS: [&str; 13] = [
    "n", "k", "l", "g", "m", "eps", "trials", "failures", "rate", "part1", "part2", "pvalue",
    "seed",
];

fn mc_row(report: &Report) -> (String, String) {
    let lookup = |col: &str| -> String {
        let v = match col {
            "n" | "k" | "l" | "g" | "eps" | "trials" => report.params.get(col).cloned(),
            "m" => report.results.get("m").cloned(),
            "failures" | "rate" | "part1" | "part2" => report.results.get(col).cloned(),
            "pvalue" => report.results.get("p_value").cloned(),
            "seed" => Some(Value::from(report.rng_seed)),
            _ => None,
        };
        csv_value(&v.unwrap_or(Value::Null))
    };
    let header = MC_COLUMNS.join(",");
    let row = MC_COLUMNS
        .iter()
        .map(|c| lookup(c))
        .collect::<Vec<_>>()
        .join(",");
    (header, row)
}

fn to_csv(report: &Report) -> String {
    if report.command == "mc-existential" {
        let (header, row) = mc_row(report);
        return format!("{header}\n{row}\n");
    }
    // Generic form: the canonical core plus verdict and hash, flattened
    // to dotted paths and sorted — stable-ordered by construction.
    let full = json!({
        "command": report.command,
        "params": Value::Object(report.params.clone()),
        "rng_seed": report.rng_seed,
        "results": report.results,
        "tool_version": report.tool_version,
        "passed": report.passed,
        "canonical_hash": report.canonical_hash,
    });
    let mut rows = Vec::new();
    flatten("", &full, &mut rows);
    rows.sort();
    let mut body = String::from("key,value\n");
    for (k, v) in rows {
        body.push_str(&format!("{},{}\n", csv_escape(&k), v));
    }
    body
}

/// Prints the report, or writes it to `out` and prints a one-line
/// summary. The Monte-Carlo CSV appends to an existing non-empty file
/// without repeating the header, so experiment batches accumulate in one
/// table.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<()> {
    let body = match format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => to_csv(report),
    };
    match out {
        None => print!("{body}"),
        Some(path) => {
            let append = format == Format::Csv
                && report.command == "mc-existential"
                && fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
            if append {
                let (_, row) = mc_row(report);
                let existing = fs::read_to_string(path)
                    .map_err(|e| CliError::new(format!("--out {}: {e}", path.display())))?;
                let sep = if existing.ends_with('\n') { "" } else { "\n" };
                fs::write(path, format!("{existing}{sep}{row}\n"))
                    .map_err(|e| CliError::new(format!("--out {}: {e}", path.display())))?;
            } else {
                fs::write(path, &body)
                    .map_err(|e| CliError::new(format!("--out {}: {e}", path.display())))?;
            }
            println!(
                "{}: {} hash={} -> {}",
                report.command,
                if report.passed { "PASS" } else { "FAIL" },
                &report.canonical_hash[..12],
                path.display()
            );
        }
    }
    Ok(())
}
