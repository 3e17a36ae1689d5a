use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{RunContext, RunSummary};
use crate::error::{Error, Result};
use crate::graph::{count_pairs_up_to, eligible_pair_count, PNorm, SegmentGraph};
use crate::hierarchy::{verify_scaling, Regime};
use crate::local::{
    long_edge_count, mu_ladder, mu_truncated, mu_truncated_distribution, pattern_census, MuMode,
    NeighborhoodQuery, RootedPattern,
};
use crate::measures::{run_chains, sample_reference, ModelParams, Schedule};
use crate::oracle::{enumerate, mask_of, NamedValue, ENUMERATION_CAP};
use crate::rng::{derive_seed, stream};
use crate::stats::{mean_stderr, total_variation};
use crate::theory::{alpha_star, local_limit_assumption_holds, theory_row};

pub(super) const SAMPLE_HELP: &str = "\
Outputs:
  samples.jsonl  one graph per line: {\"n\":N,\"edges\":[[x,y],...]} (long edges only)
  samples.csv    replica,index,long_edges,h_p
  exact_check.json (with --check-exact) total variation distance to the exact law";

pub(super) const SCALING_HELP: &str = "\
Outputs:
  scaling.csv  n,mean_log_ratio,stderr,alpha_star,mean_h,min_h_over_n
    mean_log_ratio  mean over samples of ln H_p / ln n
    min_h_over_n    smallest H_p / n among the samples";

pub(super) const LOCALFREQ_HELP: &str = "\
Outputs:
  census.csv      pattern_hash,pattern_json,mean,stderr (by decreasing mean)
  mu.csv          pattern_hash,pattern_json,census_mean,census_stderr,mu,mu_stderr,abs_diff
  long_edges.csv  l,eps,samples,exceed_count,exceed_fraction,mean_long_edges,max_long_edges
  ladder.csv      (with --ladder) pattern_hash,l,mu,increment
Pattern files hold a JSON array of {\"root\":r,\"vertices\":[...],\"edges\":[[a,b],...]}.";

pub(super) const NOLIMIT_HELP: &str = "\
Outputs:
  nolimit.csv  n,b,method,prob_all_short,stderr,mean_short_fraction
    prob_all_short       probability that every pair of length <= L is an edge
    mean_short_fraction  mean fraction of pairs of length 2..=L present";

pub(super) const THEORY_HELP: &str = "\
Outputs:
  theory.csv  gamma,b,p,alpha_star,in_exceptional_set,local_limit_assumption
    alpha_star is empty where the scaling law does not apply";

pub(super) const HIERARCHY_HELP: &str = "\
Outputs:
  hierarchy.csv  n,alpha_or_i,h_p,log_prob,ratio_h,ratio_logp
    ratio_h     h_p / n^alpha
    ratio_logp  -log_prob / n^(1 - alpha (1 - gamma))";

fn is_false(b: &bool) -> bool {
    !*b
}

fn required<T: Copy>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::Config(format!(
            "missing --{} (or \"{}\" in the config file)",
            name.replace('_', "-"),
            name
        ))
    })
}

fn required_vec<'a, T>(value: &'a Option<Vec<T>>, name: &str) -> Result<&'a [T]> {
    match value {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Config(format!(
            "--{} needs at least one value",
            name.replace('_', "-")
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// Independent draws from the reference measure.
    Reference,
    /// Metropolis chains targeting the Gibbs measure.
    Gibbs,
}

/// Chain budget shared by the sampling subcommands.
#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct ChainArgs {
    /// Samples per replica (Gibbs) or total draws (reference).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Independent Gibbs chains; each records --samples graphs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    /// Metropolis steps before the first recorded sample (default 50 x eligible pairs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    /// Metropolis steps between recorded samples (default eligible pairs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thinning: Option<u64>,
}

impl ChainArgs {
    fn samples_or(&self, default: usize) -> Result<usize> {
        match self.samples.unwrap_or(default) {
            0 => Err(Error::Config("--samples must be positive".into())),
            s => Ok(s),
        }
    }

    fn schedule(&self, params: &ModelParams, samples: usize) -> Result<Schedule> {
        let default = Schedule::default_for(params, samples)?;
        Schedule::new(
            self.burn_in.unwrap_or(default.burn_in),
            samples,
            self.thinning.unwrap_or(default.thinning),
        )
    }
}

/// Graphs tagged with their replica, and the Gibbs acceptance rate if chains ran.
type Draws = (Vec<(usize, SegmentGraph)>, Option<f64>);

/// Draws in replica order. Reference draw `i` and Gibbs chain `i` use stream `i` of `seed`.
fn draw(
    mode: SamplerMode,
    params: &ModelParams,
    seed: u64,
    budget: &ChainArgs,
    default_samples: usize,
) -> Result<Draws> {
    let samples = budget.samples_or(default_samples)?;
    match mode {
        SamplerMode::Reference => {
            let graphs = (0..samples)
                .into_par_iter()
                .map(|i| (i, sample_reference(params, &mut stream(seed, i as u64))))
                .collect();
            Ok((graphs, None))
        }
        SamplerMode::Gibbs => {
            let chains = budget.chains.unwrap_or(1);
            if chains == 0 {
                return Err(Error::Config("--chains must be positive".into()));
            }
            let schedule = budget.schedule(params, samples)?;
            let outputs = run_chains(params, seed, &schedule, chains)?;
            let steps: u64 = outputs.iter().map(|o| o.steps).sum();
            let accepted: u64 = outputs.iter().map(|o| o.accepted).sum();
            let rate = if steps == 0 { 0.0 } else { accepted as f64 / steps as f64 };
            let graphs = outputs
                .into_iter()
                .enumerate()
                .flat_map(|(c, o)| o.samples.into_iter().map(move |g| (c, g)))
                .collect();
            Ok((graphs, Some(rate)))
        }
    }
}

fn gibbs_params(n: usize, gamma: f64, b: Option<f64>, p: Option<PNorm>) -> Result<ModelParams> {
    ModelParams::new(n, gamma, required(b, "b")?, required(p, "p")?)
}

fn model(
    mode: SamplerMode,
    n: usize,
    gamma: Option<f64>,
    b: Option<f64>,
    p: Option<PNorm>,
) -> Result<ModelParams> {
    let gamma = required(gamma, "gamma")?;
    match mode {
        SamplerMode::Reference => ModelParams::reference(n, gamma),
        SamplerMode::Gibbs => gibbs_params(n, gamma, b, p),
    }
}

fn csv_writer(dir: &Path, name: &str, summary: &mut RunSummary) -> Result<csv::Writer<File>> {
    summary.outputs.push(name.to_string());
    Ok(csv::Writer::from_path(dir.join(name))?)
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T], summary: &mut RunSummary) -> Result<()> {
    let mut w = csv_writer(dir, name, summary)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- sample

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct SampleConfig {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SamplerMode>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Gibbs exponent on n (Gibbs mode).
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Norm of H_p: a number >= 1 or "inf" (Gibbs mode).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
    /// Master seed (default 0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: ChainArgs,
    /// Compare the sample frequencies with exact enumeration (small n, Gibbs mode).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub check_exact: bool,
}

#[derive(Serialize)]
struct SampleRow {
    replica: usize,
    index: usize,
    long_edges: usize,
    h_p: f64,
}

pub(super) fn sample(cfg: &SampleConfig, ctx: &RunContext) -> Result<RunSummary> {
    let mode = cfg.mode.unwrap_or(SamplerMode::Reference);
    let params = model(mode, required(cfg.n, "n")?, cfg.gamma, cfg.b, cfg.p)?;
    let seed = cfg.seed.unwrap_or(0);
    if cfg.check_exact {
        if mode != SamplerMode::Gibbs {
            return Err(Error::Config("--check-exact needs --mode gibbs".into()));
        }
        let m = eligible_pair_count(params.n);
        if m > ENUMERATION_CAP {
            return Err(Error::EnumerationCap { size: m, cap: ENUMERATION_CAP });
        }
    }
    let mut summary = RunSummary {
        seed: Some(seed),
        ..Default::default()
    };
    let (graphs, rate) = draw(mode, &params, seed, &cfg.budget, 10)?;

    summary.outputs.push("samples.jsonl".into());
    let mut jsonl = BufWriter::new(File::create(ctx.out.join("samples.jsonl"))?);
    for (_, g) in &graphs {
        writeln!(jsonl, "{}", g.to_json())?;
    }
    jsonl.flush()?;

    let mut rows = Vec::with_capacity(graphs.len());
    let mut per_replica = std::collections::BTreeMap::<usize, usize>::new();
    for (replica, g) in &graphs {
        let index = per_replica.entry(*replica).or_insert(0);
        rows.push(SampleRow {
            replica: *replica,
            index: *index,
            long_edges: g.num_long_edges(),
            h_p: g.h_p(params.p),
        });
        *index += 1;
    }
    write_rows(&ctx.out, "samples.csv", &rows, &mut summary)?;

    if let Some(rate) = rate {
        summary.notes.insert("acceptance_rate".into(), json!(rate));
    }
    if cfg.check_exact {
        let report = enumerate(&params)?;
        let mut counts = vec![0u64; report.len()];
        for (_, g) in &graphs {
            counts[mask_of(g, report.pairs()) as usize] += 1;
        }
        let empirical = crate::stats::frequencies(&counts);
        let tv = total_variation(&empirical, &report.probabilities());
        let check = json!({ "samples": graphs.len(), "states": report.len(), "total_variation": tv });
        fs::write(ctx.out.join("exact_check.json"), serde_json::to_string_pretty(&check)? + "\n")?;
        summary.outputs.push("exact_check.json".into());
        summary.notes.insert("total_variation".into(), json!(tv));
        println!("total variation distance to the exact law: {tv}");
    }
    Ok(summary)
}

// ---------------------------------------------------------------- scaling

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct ScalingConfig {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SamplerMode>,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: ChainArgs,
    /// Run Gibbs chains even where their output is not known to be meaningful.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub force: bool,
}

#[derive(Serialize)]
struct ScalingCsvRow {
    n: usize,
    mean_log_ratio: f64,
    stderr: f64,
    alpha_star: f64,
    mean_h: f64,
    min_h_over_n: f64,
}

pub(super) fn scaling(cfg: &ScalingConfig, ctx: &RunContext) -> Result<RunSummary> {
    let mode = cfg.mode.unwrap_or(SamplerMode::Gibbs);
    let grid = required_vec(&cfg.n_grid, "n_grid")?;
    let gamma = required(cfg.gamma, "gamma")?;
    let (b, p) = match mode {
        SamplerMode::Reference => (f64::NEG_INFINITY, cfg.p.unwrap_or(PNorm::Infinity)),
        SamplerMode::Gibbs => (required(cfg.b, "b")?, required(cfg.p, "p")?),
    };
    // validate every grid point before sampling anything
    let params: Vec<ModelParams> = grid
        .iter()
        .map(|&n| ModelParams::new(n, gamma, b, p))
        .collect::<Result<_>>()?;
    if mode == SamplerMode::Gibbs && !cfg.force && !(b < 0.0 || local_limit_assumption_holds(gamma, b, p)?) {
        return Err(Error::Config(format!(
            "gamma={gamma}, b={b}, p={p} is outside the range where the chain output is trusted; pass --force to run anyway"
        )));
    }
    let alpha = alpha_star(gamma, b)?.value;
    let seed = cfg.seed.unwrap_or(0);
    let mut summary = RunSummary {
        seed: Some(seed),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for (j, params) in params.iter().enumerate() {
        let (graphs, rate) = draw(mode, params, derive_seed(seed, j as u64), &cfg.budget, 50)?;
        let hs: Vec<f64> = graphs.par_iter().map(|(_, g)| g.h_p(p)).collect();
        let nf = params.n as f64;
        let ratios: Vec<f64> = hs.iter().map(|h| h.ln() / nf.ln()).collect();
        let (mean, stderr) = mean_stderr(&ratios);
        rows.push(ScalingCsvRow {
            n: params.n,
            mean_log_ratio: mean,
            stderr,
            alpha_star: alpha,
            mean_h: mean_stderr(&hs).0,
            min_h_over_n: hs.iter().map(|h| h / nf).fold(f64::INFINITY, f64::min),
        });
        if let Some(rate) = rate {
            summary
                .notes
                .insert(format!("acceptance_rate_n{}", params.n), json!(rate));
        }
    }
    write_rows(&ctx.out, "scaling.csv", &rows, &mut summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- localfreq

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct LocalFreqConfig {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SamplerMode>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: ChainArgs,
    /// Ball radius (default 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Edge-length cut-off of the ball (default 3).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Length above which edges count as long in long_edges.csv (default l).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub long_l: Option<usize>,
    /// Exceedance threshold as a fraction of n (default 0.05).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// JSON file with the patterns to compare against mu (default: every observed pattern).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patterns: Option<PathBuf>,
    /// Monte Carlo draws for mu when the window is too large to enumerate (default 100000).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_samples: Option<u64>,
    /// Comma-separated cut-offs for an exact mu ladder of the compared patterns.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct CensusRow {
    pattern_hash: String,
    pattern_json: String,
    mean: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct MuRow {
    pattern_hash: String,
    pattern_json: String,
    census_mean: f64,
    census_stderr: f64,
    mu: f64,
    mu_stderr: f64,
    abs_diff: f64,
}

#[derive(Serialize)]
struct LongEdgeRow {
    l: usize,
    eps: f64,
    samples: usize,
    exceed_count: usize,
    exceed_fraction: f64,
    mean_long_edges: f64,
    max_long_edges: usize,
}

#[derive(Serialize)]
struct LadderCsvRow {
    pattern_hash: String,
    l: usize,
    mu: f64,
    increment: f64,
}

fn read_patterns(path: &Path) -> Result<Vec<RootedPattern>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read pattern file {}: {e}", path.display())))?;
    let patterns: Vec<RootedPattern> = serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!("malformed pattern file {}: {e}", path.display()))
    })?;
    if patterns.is_empty() {
        return Err(Error::Config(format!("pattern file {} is empty", path.display())));
    }
    Ok(patterns)
}

pub(super) fn localfreq(cfg: &LocalFreqConfig, ctx: &RunContext) -> Result<RunSummary> {
    let mode = cfg.mode.unwrap_or(SamplerMode::Reference);
    let params = model(mode, required(cfg.n, "n")?, cfg.gamma, cfg.b, cfg.p)?;
    let l = cfg.l.unwrap_or(3);
    let query = NeighborhoodQuery::truncated(cfg.k.unwrap_or(1), l)?;
    let long_l = cfg.long_l.unwrap_or(l);
    let eps = cfg.eps.unwrap_or(0.05);
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Config(format!("--eps must be positive, got {eps}")));
    }
    let mu_samples = cfg.mu_samples.unwrap_or(100_000);
    let requested = cfg.patterns.as_deref().map(read_patterns).transpose()?;
    let seed = cfg.seed.unwrap_or(0);
    let mut summary = RunSummary {
        seed: Some(seed),
        ..Default::default()
    };

    let (graphs, rate) = draw(mode, &params, seed, &cfg.budget, 50)?;
    let graphs: Vec<SegmentGraph> = graphs.into_iter().map(|(_, g)| g).collect();
    if let Some(rate) = rate {
        summary.notes.insert("acceptance_rate".into(), json!(rate));
    }

    let census = pattern_census(&graphs, &query)?;
    let census_rows: Vec<CensusRow> = census
        .ranked()
        .into_iter()
        .map(|e| CensusRow {
            pattern_hash: e.pattern.key_hash(),
            pattern_json: e.pattern.to_json(),
            mean: e.mean,
            stderr: e.stderr,
        })
        .collect();
    write_rows(&ctx.out, "census.csv", &census_rows, &mut summary)?;

    let compared: Vec<RootedPattern> = match &requested {
        Some(p) => p.iter().map(RootedPattern::canonical).collect(),
        None => census.ranked().into_iter().map(|e| e.pattern.clone()).collect(),
    };
    let exact = match mu_truncated_distribution(params.gamma, &query) {
        Ok(law) => Some(law),
        Err(Error::EnumerationCap { .. }) => None,
        Err(e) => return Err(e),
    };
    let mu_seed = derive_seed(seed, u64::MAX);
    let mu_rows: Vec<MuRow> = compared
        .iter()
        .map(|pattern| {
            let (mu, mu_stderr) = match &exact {
                Some(law) => (law.get(pattern).copied().unwrap_or(0.0), 0.0),
                None => {
                    let mc = MuMode::MonteCarlo { samples: mu_samples, seed: mu_seed };
                    let est = mu_truncated(params.gamma, &query, pattern, mc)?;
                    (est.value, est.stderr)
                }
            };
            let (census_mean, census_stderr) = census
                .get(pattern)
                .map_or((0.0, 0.0), |e| (e.mean, e.stderr));
            Ok(MuRow {
                pattern_hash: pattern.key_hash(),
                pattern_json: pattern.to_json(),
                census_mean,
                census_stderr,
                mu,
                mu_stderr,
                abs_diff: (census_mean - mu).abs(),
            })
        })
        .collect::<Result<_>>()?;
    write_rows(&ctx.out, "mu.csv", &mu_rows, &mut summary)?;
    summary
        .notes
        .insert("mu_method".into(), json!(if exact.is_some() { "exact" } else { "monte-carlo" }));

    let threshold = eps * params.n as f64;
    let counts: Vec<usize> = graphs.par_iter().map(|g| long_edge_count(g, long_l)).collect();
    let exceed_count = counts.iter().filter(|&&c| c as f64 > threshold).count();
    let long_row = LongEdgeRow {
        l: long_l,
        eps,
        samples: graphs.len(),
        exceed_count,
        exceed_fraction: exceed_count as f64 / graphs.len() as f64,
        mean_long_edges: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
        max_long_edges: counts.iter().copied().max().unwrap_or(0),
    };
    write_rows(&ctx.out, "long_edges.csv", &[long_row], &mut summary)?;

    if let Some(ls) = &cfg.ladder {
        let mut rows = Vec::new();
        for pattern in &compared {
            for rung in mu_ladder(params.gamma, query.k, pattern, ls)? {
                rows.push(LadderCsvRow {
                    pattern_hash: pattern.key_hash(),
                    l: rung.l,
                    mu: rung.mu,
                    increment: rung.increment,
                });
            }
        }
        write_rows(&ctx.out, "ladder.csv", &rows, &mut summary)?;
    }
    Ok(summary)
}

// ---------------------------------------------------------------- nolimit

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoLimitMethod {
    /// Enumerate when the size allows it, otherwise run chains.
    Auto,
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct NoLimitConfig {
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
    /// Length cut-off L (default 2).
    #[arg(long = "big-l")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_l: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<NoLimitMethod>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub budget: ChainArgs,
}

#[derive(Serialize)]
struct NoLimitRow {
    n: usize,
    b: f64,
    method: &'static str,
    prob_all_short: f64,
    stderr: f64,
    mean_short_fraction: f64,
}

pub(super) fn nolimit(cfg: &NoLimitConfig, ctx: &RunContext) -> Result<RunSummary> {
    let grid = required_vec(&cfg.n_grid, "n_grid")?;
    let b_grid = required_vec(&cfg.b_grid, "b_grid")?;
    let gamma = required(cfg.gamma, "gamma")?;
    let p = required(cfg.p, "p")?;
    let big_l = cfg.big_l.unwrap_or(2);
    if big_l < 2 {
        return Err(Error::Config(format!("--big-l must be at least 2, got {big_l}")));
    }
    let method = cfg.method.unwrap_or(NoLimitMethod::Auto);
    let mut points = Vec::new();
    for &n in grid {
        for &b in b_grid {
            points.push(ModelParams::new(n, gamma, b, p)?);
        }
    }
    let seed = cfg.seed.unwrap_or(0);
    let mut summary = RunSummary {
        seed: Some(seed),
        ..Default::default()
    };
    if gamma.is_nan() || gamma <= 1.0 {
        summary.warnings.push(format!("gamma={gamma} is outside the range gamma > 1 where all short edges are expected"));
    }
    match p {
        PNorm::Infinity => summary.warnings.push("p=inf is outside the range of finite p".into()),
        PNorm::Finite(pf) => {
            for &b in b_grid {
                if b.is_nan() || b <= pf + 1.0 {
                    summary.warnings.push(format!("b={b} does not exceed p+1={}", pf + 1.0));
                }
            }
        }
    }

    let mut rows = Vec::new();
    for (j, params) in points.iter().enumerate() {
        let n = params.n;
        let short_pairs = count_pairs_up_to(n, big_l);
        let fraction = |g: &SegmentGraph| {
            if short_pairs == 0 {
                1.0
            } else {
                g.short_edges_present(big_l) as f64 / short_pairs as f64
            }
        };
        let exact = match method {
            NoLimitMethod::Exact => true,
            NoLimitMethod::Mcmc => false,
            NoLimitMethod::Auto => eligible_pair_count(n) <= ENUMERATION_CAP,
        };
        let row = if exact {
            let report = enumerate(params)?;
            NoLimitRow {
                n,
                b: params.b,
                method: "exact",
                prob_all_short: report.event_probability(|g| g.contains_all_edges_up_to(big_l)),
                stderr: 0.0,
                mean_short_fraction: report.expectation(fraction),
            }
        } else {
            let (graphs, _) = draw(SamplerMode::Gibbs, params, derive_seed(seed, j as u64), &cfg.budget, 100)?;
            let hits: Vec<f64> = graphs
                .iter()
                .map(|(_, g)| if g.contains_all_edges_up_to(big_l) { 1.0 } else { 0.0 })
                .collect();
            let fractions: Vec<f64> = graphs.iter().map(|(_, g)| fraction(g)).collect();
            let (prob, stderr) = mean_stderr(&hits);
            NoLimitRow {
                n,
                b: params.b,
                method: "mcmc",
                prob_all_short: prob,
                stderr,
                mean_short_fraction: mean_stderr(&fractions).0,
            }
        };
        rows.push(row);
    }
    write_rows(&ctx.out, "nolimit.csv", &rows, &mut summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- theory

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct TheoryConfig {
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_grid: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
}

pub(super) fn theory(cfg: &TheoryConfig, ctx: &RunContext) -> Result<RunSummary> {
    let gammas = required_vec(&cfg.gamma_grid, "gamma_grid")?;
    let bs = required_vec(&cfg.b_grid, "b_grid")?;
    let p = required(cfg.p, "p")?.validate()?;
    let mut rows = Vec::with_capacity(gammas.len() * bs.len());
    for &gamma in gammas {
        for &b in bs {
            rows.push(theory_row(gamma, b, p)?);
        }
    }
    let mut summary = RunSummary::default();
    write_rows(&ctx.out, "theory.csv", &rows, &mut summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- enumerate

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct EnumerateConfig {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
    /// Also report the probability that every pair of length <= L is an edge.
    #[arg(long = "big-l")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_l: Option<usize>,
    /// Write the probability of every graph (2^m rows).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub table: bool,
}

pub(super) fn enumerate_cmd(cfg: &EnumerateConfig, ctx: &RunContext) -> Result<RunSummary> {
    let params = gibbs_params(required(cfg.n, "n")?, required(cfg.gamma, "gamma")?, cfg.b, cfg.p)?;
    let report = enumerate(&params)?;
    let p = params.p;
    let mut results = vec![
        NamedValue {
            name: "mean_h_p".into(),
            value: report.expectation(|g| g.h_p(p)),
        },
        NamedValue {
            name: "mean_long_edges".into(),
            value: report.expectation(|g| g.num_long_edges() as f64),
        },
        NamedValue {
            name: "mode_probability".into(),
            value: report.mode().probability,
        },
    ];
    if let Some(l) = cfg.big_l {
        results.push(NamedValue {
            name: format!("prob_all_edges_up_to_{l}"),
            value: report.event_probability(|g| g.contains_all_edges_up_to(l)),
        });
    }
    fs::write(ctx.out.join("report.json"), report.to_json(&results, cfg.table)? + "\n")?;
    let mut summary = RunSummary::default();
    summary.outputs.push("report.json".into());
    summary
        .notes
        .insert("log_z".into(), Value::from(report.log_z()));
    Ok(summary)
}


// ---------------------------------------------------------------- hierarchy

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    /// gamma < 1
    Sub,
    /// gamma > 1
    Super,
    /// gamma = 1, indexed by i
    Critical,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct HierarchyConfig {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Critical index (alternatively derived from --alpha).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    /// Norm of H_p (default inf).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<PNorm>,
}

pub(super) fn hierarchy(cfg: &HierarchyConfig, ctx: &RunContext) -> Result<RunSummary> {
    let grid = required_vec(&cfg.n_grid, "n_grid")?;
    let regime = match required(cfg.regime, "regime")? {
        RegimeKind::Sub => Regime::SubCritical {
            gamma: required(cfg.gamma, "gamma")?,
            alpha: required(cfg.alpha, "alpha")?,
        },
        RegimeKind::Super => Regime::SuperCritical {
            gamma: required(cfg.gamma, "gamma")?,
            alpha: required(cfg.alpha, "alpha")?,
        },
        RegimeKind::Critical => match (cfg.i, cfg.alpha) {
            (Some(i), _) => Regime::Critical { i },
            (None, Some(alpha)) => Regime::critical_for_alpha(alpha)?,
            (None, None) => return Err(Error::Config("critical regime needs --i or --alpha".into())),
        },
    }
    .validate()?;
    let p = cfg.p.unwrap_or(PNorm::Infinity).validate()?;
    let rows = verify_scaling(grid, regime, p)?;
    let mut summary = RunSummary::default();
    write_rows(&ctx.out, "hierarchy.csv", &rows, &mut summary)?;
    Ok(summary)
}
