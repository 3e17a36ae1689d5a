//! Experiment driver behind the `sgg` binary.
//!
//! Every subcommand reads its settings from flags and, optionally, from a
//! flat JSON object given with `--config` (flags win). Outputs go to `--out`
//! together with a `manifest.json` recording the resolved configuration, its
//! hash, the seed and the tool version. Randomness flows from `--seed` only:
//! replica `i` uses [`derive_seed`](crate::rng::derive_seed)`(seed, i)`, so
//! numerical outputs do not depend on `--threads`.

mod commands;

pub use commands::{
    EnumerateConfig, HierarchyConfig, LocalFreqConfig, NoLimitConfig, RegimeKind, SampleConfig,
    SamplerMode, ScalingConfig, TheoryConfig,
};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

const SEED_RULE: &str = "replica i uses splitmix64(seed + (i + 1) * 0x9e3779b97f4a7c15) as its ChaCha8 seed";

#[derive(Debug, Parser)]
#[command(name = "sgg", version, about = "Spatial Gibbs random graphs on an integer segment")]
pub struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// JSON object with default values for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw graphs from the reference or Gibbs measure (samples.jsonl, samples.csv).
    #[command(after_help = commands::SAMPLE_HELP)]
    Sample(SampleConfig),
    /// Estimate log H_p / log n over a grid of sizes (scaling.csv).
    #[command(after_help = commands::SCALING_HELP)]
    Scaling(ScalingConfig),
    /// Neighbourhood census against mu^l and long-edge exceedances.
    #[command(after_help = commands::LOCALFREQ_HELP)]
    Localfreq(LocalFreqConfig),
    /// Probability that every edge of length <= L is present (nolimit.csv).
    #[command(after_help = commands::NOLIMIT_HELP)]
    Nolimit(NoLimitConfig),
    /// Table of alpha*, E_p membership and the local-limit assumption (theory.csv).
    #[command(after_help = commands::THEORY_HELP)]
    Theory(TheoryConfig),
    /// Exact enumeration for small n (report.json).
    Enumerate(EnumerateConfig),
    /// H_p and subgraph log-probability of the hierarchical constructions (hierarchy.csv).
    #[command(after_help = commands::HIERARCHY_HELP)]
    Hierarchy(HierarchyConfig),
}

/// Where a run writes and how many threads it may use.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub threads: usize,
}

/// What a subcommand produced, for the manifest.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub notes: Map<String, Value>,
    pub warnings: Vec<String>,
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_)
        | Error::InvalidGraph(_)
        | Error::Config(_)
        | Error::EnumerationCap { .. }
        | Error::Json(_) => EXIT_VALIDATION,
        Error::Io(_) | Error::Csv(_) => EXIT_FAILURE,
    }
}

pub fn run(cli: Cli) -> Result<RunSummary> {
    let file = match &cli.config {
        Some(path) => Some(read_config(path)?),
        None => None,
    };
    let ctx = RunContext {
        out: cli.out.clone(),
        threads: cli.threads,
    };
    match cli.command {
        Command::Sample(flags) => execute("sample", &ctx, resolve(&flags, file.as_ref())?, commands::sample),
        Command::Scaling(flags) => execute("scaling", &ctx, resolve(&flags, file.as_ref())?, commands::scaling),
        Command::Localfreq(flags) => {
            execute("localfreq", &ctx, resolve(&flags, file.as_ref())?, commands::localfreq)
        }
        Command::Nolimit(flags) => execute("nolimit", &ctx, resolve(&flags, file.as_ref())?, commands::nolimit),
        Command::Theory(flags) => execute("theory", &ctx, resolve(&flags, file.as_ref())?, commands::theory),
        Command::Enumerate(flags) => {
            execute("enumerate", &ctx, resolve(&flags, file.as_ref())?, commands::enumerate_cmd)
        }
        Command::Hierarchy(flags) => {
            execute("hierarchy", &ctx, resolve(&flags, file.as_ref())?, commands::hierarchy)
        }
    }
}

fn read_config(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !value.is_object() {
        return Err(Error::Config(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    }
    Ok(value)
}

/// Overlays the flags that were given on top of the config file's values.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Value>) -> Result<T> {
    let mut merged = match file {
        Some(Value::Object(m)) => m.clone(),
        _ => Map::new(),
    };
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))
}

fn execute<T, F>(name: &str, ctx: &RunContext, config: T, body: F) -> Result<RunSummary>
where
    T: Serialize + Sync,
    F: FnOnce(&T, &RunContext) -> Result<RunSummary> + Send,
{
    fs::create_dir_all(&ctx.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} threads: {e}", ctx.threads)))?;
    let summary = pool.install(|| body(&config, ctx))?;
    write_manifest(name, ctx, &config, &summary)?;
    Ok(summary)
}

/// SHA-256 of the configuration's JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

fn write_manifest<T: Serialize>(
    name: &str,
    ctx: &RunContext,
    config: &T,
    summary: &RunSummary,
) -> Result<()> {
    let manifest = serde_json::json!({
        "tool": "sgg",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": name,
        "config": config,
        "config_hash": config_hash(config)?,
        "seed": summary.seed,
        "seed_rule": SEED_RULE,
        "threads": rayon::current_num_threads().max(ctx.threads),
        "outputs": summary.outputs,
        "notes": summary.notes,
        "warnings": summary.warnings,
    });
    fs::write(
        ctx.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}
