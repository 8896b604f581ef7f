//! Experiment driver behind the `colorchain` binary.
//!
//! Every subcommand resolves an [`ExperimentConfig`] from an optional JSON
//! file plus flag overrides, runs deterministically from its seeds and
//! returns the rendered report together with a verification verdict.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::coupling::{
    contraction_estimate, run_coupling, write_drift_csv, write_trajectory_csv, CouplingRun, RunOptions, Schedule,
};
use crate::dynamics::{
    available_colors, composed_canonical_path, degeneracy_coloring, glauber_step, layered_path,
    layered_round_bound, random_degeneracy_coloring, replay, run_set_dynamics, ChainState, Coloring, RoundMode,
};
use crate::error::{Error, Result};
use crate::graph::{degeneracy, from_spec, Graph, Vertex};
use crate::oracle::{enumerate_colorings, exact_tv, DEFAULT_BUDGET};
use crate::rng::{self, replica};
use crate::sampler::{burn_in, Sampler};
use crate::spectral::{
    choose_epsilon, levels_from_weights, power_iterate, verify_partition, EigenData, LevelPartition,
    DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE,
};
use crate::structure::{forest_decomposition, struct_subset};
use crate::uniformity::{lemma31_check, uniformity_report};

/// Colorings spaces up to this size are checked over all pairs by `path`.
pub const EXHAUSTIVE_PAIRS_LIMIT: usize = 10_000;
/// Largest state space for which `path` computes the exact diameter.
pub const DIAMETER_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    #[default]
    Glauber,
    SetDynamics,
}

/// Everything an experiment depends on. The SHA-256 of its JSON form
/// (together with the subcommand) is embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Generator spec (`grid:3:3`, `tri:50:7`, ...) or edge-list file.
    pub graph: Option<String>,
    pub k: Option<u32>,
    pub chain: ChainKind,
    pub steps: Option<u64>,
    pub rounds: Option<u64>,
    pub seeds: Vec<u64>,
    pub epsilon: Option<f64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Extra analyses run by `sample`.
    pub uniformity: bool,
    pub coupling: bool,
    pub oracle: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: None,
            k: None,
            chain: ChainKind::Glauber,
            steps: None,
            rounds: None,
            seeds: vec![0],
            epsilon: None,
            samples: None,
            out: None,
            format: Format::Json,
            uniformity: false,
            coupling: false,
            oracle: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("config needs at least one seed".into()));
        }
        if let Some(k) = self.k {
            if k < 2 {
                return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
            }
        }
        if let Some(src) = &self.graph {
            if !Path::new(src).exists() && from_spec(src).is_err() {
                from_spec(src).map_err(|e| {
                    Error::InvalidArgument(format!("graph {src:?} is neither an existing file nor a spec: {e}"))
                })?;
            }
        }
        Ok(())
    }

    fn k(&self) -> Result<u32> {
        self.k.ok_or_else(|| Error::InvalidArgument("this command needs --k".into()))
    }
}

/// Loads an edge-list file when `src` names one, else builds a generator spec.
pub fn load_graph(src: &str) -> Result<Graph> {
    if Path::new(src).exists() {
        Graph::parse_edge_list(&fs::read_to_string(src)?)
    } else {
        from_spec(src)
    }
}

#[derive(Debug, Parser)]
#[command(name = "colorchain", version, about = "Sample and analyse proper colorings of sparse graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub k: Option<u32>,
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    #[arg(long, global = true)]
    pub rounds: Option<u64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub chain: Option<ChainKind>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph as an edge list, e.g. `gen grid 3 3`.
    Gen {
        #[arg(required = true, num_args = 1..)]
        spec: Vec<String>,
    },
    /// Power iteration, epsilon, level sets and their verification.
    Levels { graph: Option<String> },
    /// Colorings drawn by running the configured chain.
    Sample {
        graph: Option<String>,
        /// Compare the sample histogram with the exact uniform distribution.
        #[arg(long)]
        oracle: bool,
        /// Report available-color statistics of the samples.
        #[arg(long)]
        uniformity: bool,
        /// Estimate the one-step coupling drift from the chain.
        #[arg(long)]
        coupling: bool,
    },
    /// Jerrum-coupled pair of chains from random starts.
    Couple {
        graph: Option<String>,
        /// Start both chains from the same coloring.
        #[arg(long)]
        same_start: bool,
        /// Emit per-update drift rows instead of the trajectory.
        #[arg(long)]
        drift: bool,
    },
    /// Exact enumeration, transition matrix, diameter and mixing time.
    Oracle { graph: Option<String> },
    /// Available-color histogram and the frozen-vertex check.
    Uniformity { graph: Option<String> },
    /// Constructive walks between colorings against their length bounds.
    Path {
        graph: Option<String>,
        /// Random pairs when the coloring space is too large for all pairs.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
    /// Forest cover and structured subsets of random vertex sets.
    Struct {
        graph: Option<String>,
        #[arg(long, default_value_t = 100)]
        subsets: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::Levels { .. } => "levels",
            Command::Sample { .. } => "sample",
            Command::Couple { .. } => "couple",
            Command::Oracle { .. } => "oracle",
            Command::Uniformity { .. } => "uniformity",
            Command::Path { .. } => "path",
            Command::Struct { .. } => "struct",
        }
    }

    fn graph(&self) -> Option<&str> {
        match self {
            Command::Gen { .. } => None,
            Command::Levels { graph }
            | Command::Sample { graph, .. }
            | Command::Couple { graph, .. }
            | Command::Oracle { graph }
            | Command::Uniformity { graph }
            | Command::Path { graph, .. }
            | Command::Struct { graph, .. } => graph.as_deref(),
        }
    }
}

/// Rendered report plus whether every verification it ran passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub verified: bool,
    pub out: Option<PathBuf>,
}

impl Outcome {
    /// Writes the report to the configured file, or to stdout.
    pub fn emit(&self) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, &self.output)?,
            None => print!("{}", self.output),
        }
        Ok(())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn execute<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    run(&cli)
}

pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_json(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(g) = cli.command.graph() {
        config.graph = Some(g.to_string());
    }
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    config.k = cli.k.or(config.k);
    config.steps = cli.steps.or(config.steps);
    config.rounds = cli.rounds.or(config.rounds);
    config.epsilon = cli.epsilon.or(config.epsilon);
    config.samples = cli.samples.or(config.samples);
    config.chain = cli.chain.unwrap_or(config.chain);
    config.out = cli.out.clone().or(config.out);
    config.format = cli.format.unwrap_or(config.format);
    if let Command::Sample { oracle, uniformity, coupling, .. } = cli.command {
        config.oracle |= oracle;
        config.uniformity |= uniformity;
        config.coupling |= coupling;
    }
    config.validate()?;
    Ok(config)
}

struct Context {
    command: &'static str,
    config: ExperimentConfig,
    hash: String,
}

impl Context {
    fn seed(&self) -> u64 {
        self.config.seeds[0]
    }

    fn graph(&self) -> Result<Graph> {
        let src = self.config.graph.as_deref().ok_or_else(|| Error::InvalidArgument("no graph given".into()))?;
        load_graph(src)
    }

    fn json(&self, report: Value) -> String {
        let doc = json!({
            "command": self.command,
            "config_hash": self.hash,
            "seed": self.seed(),
            "seeds": self.config.seeds,
            "graph": self.config.graph,
            "report": report,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }

    fn csv(&self, body: Vec<u8>) -> String {
        format!(
            "# colorchain {} config_hash={} seed={}\n{}",
            self.command,
            self.hash,
            self.seed(),
            String::from_utf8(body).expect("csv is utf-8")
        )
    }

    fn finish(&self, report: Value, csv: impl FnOnce() -> Result<Vec<u8>>, verified: bool) -> Result<Outcome> {
        let output = match self.config.format {
            Format::Json => self.json(report),
            Format::Csv => self.csv(csv()?),
        };
        Ok(Outcome { output, verified, out: self.config.out.clone() })
    }
}

pub fn config_hash(command: &str, config: &ExperimentConfig) -> String {
    let canonical = json!({ "command": command, "config": config }).to_string();
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let config = resolve_config(cli)?;
    let command = cli.command.name();
    let ctx = Context { command, hash: config_hash(command, &config), config };
    match &cli.command {
        Command::Gen { spec } => cmd_gen(&ctx, spec),
        Command::Levels { .. } => cmd_levels(&ctx),
        Command::Sample { .. } => cmd_sample(&ctx),
        Command::Couple { same_start, drift, .. } => cmd_couple(&ctx, *same_start, *drift),
        Command::Oracle { .. } => cmd_oracle(&ctx),
        Command::Uniformity { .. } => cmd_uniformity(&ctx),
        Command::Path { pairs, .. } => cmd_path(&ctx, *pairs),
        Command::Struct { subsets, .. } => cmd_struct(&ctx, *subsets),
    }
}

fn csv_rows<R, I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    R: IntoIterator<Item = String>,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(crate::coupling::csv_err)?;
    for row in rows {
        w.write_record(row).map_err(crate::coupling::csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// `gen grid 3 3`, `gen grid:3:3` and `gen tri 50 --seed 7` all work; a
/// triangulation without an explicit seed takes the global one.
fn cmd_gen(ctx: &Context, words: &[String]) -> Result<Outcome> {
    let mut spec = words.join(":");
    if spec.starts_with("tri:") && spec.matches(':').count() == 1 {
        spec = format!("{spec}:{}", ctx.seed());
    }
    let g = from_spec(&spec)?;
    Ok(Outcome { output: g.to_edge_list(), verified: true, out: ctx.config.out.clone() })
}

fn eigen_and_epsilon(ctx: &Context, g: &Graph) -> Result<(EigenData, f64)> {
    let eigen = power_iterate(g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS, ctx.seed())?;
    let eps = match ctx.config.epsilon {
        Some(e) => e,
        None => choose_epsilon(g, &eigen)?,
    };
    Ok((eigen, eps))
}

fn cmd_levels(ctx: &Context) -> Result<Outcome> {
    let g = ctx.graph()?;
    let (eigen, eps) = eigen_and_epsilon(ctx, &g)?;
    let part = levels_from_weights(&g, &eigen.weights, eps)?;
    let check = verify_partition(&part, &g, &eigen);
    let report = json!({
        "rho_hat": eigen.rho_hat,
        "rho_tilde": eigen.rho_tilde,
        "iterations": eigen.iterations,
        "residual": eigen.residual,
        "partition": part.to_json(),
        "verification": serde_json::to_value(&check).expect("report serializes"),
        "pass": check.pass(),
    });
    let csv = || {
        csv_rows(
            &["vertex", "level", "weight"],
            (0..g.n()).map(|v| [v.to_string(), part.level_of[v].to_string(), format!("{:.17e}", part.weights[v])]),
        )
    };
    ctx.finish(report, csv, check.pass())
}

fn partition_for(ctx: &Context, g: &Graph) -> Result<LevelPartition> {
    let (eigen, eps) = eigen_and_epsilon(ctx, g)?;
    crate::spectral::build_levels(g, &eigen, eps)
}

fn cmd_sample(ctx: &Context) -> Result<Outcome> {
    let g = ctx.graph()?;
    let k = ctx.config.k()?;
    let samples = ctx.config.samples.unwrap_or(1).max(1);
    let part = match ctx.config.chain {
        ChainKind::SetDynamics => Some(partition_for(ctx, &g)?),
        ChainKind::Glauber => None,
    };
    let steps = ctx.config.steps.unwrap_or_else(|| burn_in(g.n()));
    let rounds = ctx.config.rounds.unwrap_or_else(|| 10 * part.as_ref().map_or(1, |p| p.m() as u64));
    let start = degeneracy_coloring(&g, &degeneracy(&g), k)?;
    let mut drawn: Vec<(u64, usize, Coloring)> = Vec::new();
    for &seed in &ctx.config.seeds {
        let mut state = ChainState::seeded(&g, start.clone(), seed)?;
        for i in 0..samples {
            match &part {
                Some(p) => {
                    run_set_dynamics(&mut state, &g, p, rounds, RoundMode::Random)?;
                }
                None => {
                    for _ in 0..steps {
                        glauber_step(&mut state, &g, None)?;
                    }
                }
            }
            drawn.push((seed, i, state.coloring().clone()));
        }
    }
    let mut report = json!({
        "k": k,
        "chain": ctx.config.chain,
        "steps_per_sample": part.is_none().then_some(steps),
        "rounds_per_sample": part.as_ref().map(|_| rounds),
        "samples": drawn.iter().map(|(s, i, c)| json!({ "seed": s, "index": i, "colors": c.colors() })).collect::<Vec<_>>(),
    });
    if ctx.config.oracle {
        let model = enumerate_colorings(&g, k, DEFAULT_BUDGET)?;
        let hist = model.histogram(drawn.iter().map(|(_, _, c)| c.colors()))?;
        report["oracle"] = json!({ "omega_size": model.len(), "tv": exact_tv(&hist, &model.uniform())? });
    }
    if ctx.config.uniformity {
        let counts: Vec<Vec<usize>> = drawn
            .iter()
            .map(|(_, _, c)| (0..g.n()).map(|v| available_colors(&g, c, v).len()).collect())
            .collect();
        let all = counts.iter().flatten();
        let total = counts.len() * g.n();
        report["uniformity"] = json!({
            "min_available": all.clone().min(),
            "mean_available": all.clone().sum::<usize>() as f64 / total.max(1) as f64,
            "frozen": all.filter(|&&a| a == 1).count(),
        });
    }
    if ctx.config.coupling {
        let mut source = Sampler::chain(&g, k, ctx.seed(), steps.max(1))?;
        let est = contraction_estimate(&g, None, k, samples.max(10), &mut source, None, ctx.seed())?;
        report["coupling"] = serde_json::to_value(&est).expect("report serializes");
    }
    let csv = || {
        csv_rows(
            &["seed", "sample", "vertex", "color"],
            drawn.iter().flat_map(|(s, i, c)| {
                c.colors().iter().enumerate().map(move |(v, col)| [s.to_string(), i.to_string(), v.to_string(), col.to_string()])
            }),
        )
    };
    ctx.finish(report, csv, true)
}

fn cmd_couple(ctx: &Context, same_start: bool, drift: bool) -> Result<Outcome> {
    let g = ctx.graph()?;
    let k = ctx.config.k()?;
    let dd = degeneracy(&g);
    let part = match ctx.config.chain {
        ChainKind::SetDynamics => Some(partition_for(ctx, &g)?),
        ChainKind::Glauber => None,
    };
    let schedule = match &part {
        Some(p) => Schedule::SetDynamics {
            partition: p,
            rounds: ctx.config.rounds.unwrap_or(100 * p.m() as u64),
            mode: RoundMode::Random,
        },
        None => Schedule::Glauber { steps: ctx.config.steps.unwrap_or_else(|| burn_in(g.n())) },
    };
    let weights = part.as_ref().map(|p| p.weights.as_slice());
    let mut runs: Vec<(u64, CouplingRun)> = Vec::new();
    for &seed in &ctx.config.seeds {
        let mut rng = replica(seed, 0);
        let x = random_degeneracy_coloring(&g, &dd, k, &mut rng)?;
        let y = if same_start { x.clone() } else { random_degeneracy_coloring(&g, &dd, k, &mut rng)? };
        let options = RunOptions { stop_on_coalescence: true, record: true };
        runs.push((seed, run_coupling(&g, x, y, &schedule, weights, seed, options)?));
    }
    let report = json!({
        "k": k,
        "chain": ctx.config.chain,
        "runs": runs.iter().map(|(seed, r)| json!({
            "seed": seed,
            "initial_disagreements": r.initial_disagreements.len(),
            "coalesced_at": r.coalesced_at,
            "total_steps": r.total_steps,
            "final_wd": r.trajectory.last().map(|&(_, wd)| wd + 0.0),
        })).collect::<Vec<_>>(),
    });
    let csv = || {
        let mut buf = Vec::new();
        let iter = runs.iter().map(|(s, r)| (*s, r));
        if drift {
            write_drift_csv(&mut buf, iter)?;
        } else {
            write_trajectory_csv(&mut buf, iter)?;
        }
        Ok(buf)
    };
    ctx.finish(report, csv, true)
}

fn cmd_oracle(ctx: &Context) -> Result<Outcome> {
    let g = ctx.graph()?;
    let k = ctx.config.k()?;
    let mut model = enumerate_colorings(&g, k, DEFAULT_BUDGET)?;
    model.build_transition_matrix();
    let summary = model.report()?;
    let report = summary.to_json();
    let csv = || {
        let obj = report.as_object().expect("report is an object");
        csv_rows(&["metric", "value"], obj.iter().map(|(key, v)| [key.clone(), v.to_string()]))
    };
    ctx.finish(report.clone(), csv, summary.stationary_ok)
}

fn cmd_uniformity(ctx: &Context) -> Result<Outcome> {
    let g = ctx.graph()?;
    let k = ctx.config.k()?;
    let samples = ctx.config.samples.unwrap_or(1000).max(1);
    let eps = match ctx.config.epsilon {
        Some(e) => e,
        None => {
            let eigen = power_iterate(&g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS, ctx.seed())?;
            choose_epsilon(&g, &eigen).unwrap_or(0.0)
        }
    };
    let threshold = 2.0 * (g.max_degree() as f64).powf(1.0 - eps / 4.0);
    let mut sampler = Sampler::auto(&g, k, ctx.seed())?;
    let uni = uniformity_report(&g, samples, &mut sampler, threshold)?;
    let lemma = lemma31_check(&g, k, samples, &mut sampler, eps)?;
    let report = json!({
        "epsilon": eps,
        "uniformity": uni.to_json(),
        "frozen_check": serde_json::to_value(&lemma).expect("report serializes"),
    });
    let csv = || {
        csv_rows(&["available", "count"], uni.histogram.iter().enumerate().map(|(a, c)| [a.to_string(), c.to_string()]))
    };
    ctx.finish(report, csv, true)
}

fn cmd_path(ctx: &Context, pairs: usize) -> Result<Outcome> {
    let g = ctx.graph()?;
    let n = g.n();
    let dd = degeneracy(&g);
    let k = ctx.config.k.unwrap_or(2 * (dd.d as u32 + 1));
    let model = match enumerate_colorings(&g, k, DEFAULT_BUDGET) {
        Ok(m) => Some(m),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut rng = rng::seeded(ctx.seed());
    let mut chosen: Vec<(Coloring, Coloring)> = Vec::new();
    let exhaustive = model.as_ref().is_some_and(|m| m.len() <= EXHAUSTIVE_PAIRS_LIMIT);
    match &model {
        Some(m) if exhaustive => {
            for i in 0..m.len() {
                for j in 0..m.len() {
                    chosen.push((m.coloring(i), m.coloring(j)));
                }
            }
        }
        Some(m) => {
            for _ in 0..pairs {
                chosen.push((m.sample_uniform(&mut rng), m.sample_uniform(&mut rng)));
            }
        }
        None => {
            for _ in 0..pairs {
                let x = random_degeneracy_coloring(&g, &dd, k, &mut rng)?;
                chosen.push((x, random_degeneracy_coloring(&g, &dd, k, &mut rng)?));
            }
        }
    }
    let bound = n * n.saturating_sub(1);
    let layered_bound = layered_round_bound(n, k, dd.d).map(|r| r as usize * n);
    let (mut worst, mut over, mut layered_worst, mut layered_over) = (0, 0, 0, 0);
    for (x, y) in &chosen {
        let walk = composed_canonical_path(&g, x, y, &dd)?;
        if replay(&g, x, &walk)? != *y {
            return Err(Error::Invariant("canonical walk misses its endpoint".into()));
        }
        worst = worst.max(walk.len());
        over += usize::from(walk.len() > bound);
        if let Some(lb) = layered_bound {
            let lp = layered_path(&g, x, y, k)?;
            if replay(&g, x, &lp.moves)? != *y {
                return Err(Error::Invariant("layered walk misses its endpoint".into()));
            }
            layered_worst = layered_worst.max(lp.moves.len());
            layered_over += usize::from(lp.moves.len() > lb);
        }
    }
    let diameter = match model {
        Some(mut m) if m.len() <= DIAMETER_LIMIT => {
            m.build_transition_matrix();
            Some(m.diameter())
        }
        _ => None,
    };
    let diameter_ok = diameter.is_none_or(|d| d.value().is_some_and(|v| v as usize <= bound));
    let report = json!({
        "n": n,
        "k": k,
        "d": dd.d,
        "pairs": chosen.len(),
        "exhaustive": exhaustive,
        "composed_max": worst,
        "composed_bound": bound,
        "composed_over": over,
        "layered_max": layered_bound.map(|_| layered_worst),
        "layered_bound": layered_bound,
        "layered_over": layered_bound.map(|_| layered_over),
        "diameter": diameter.map(|d| d.to_json()),
    });
    let verified = over == 0 && layered_over == 0 && diameter_ok;
    let csv = || {
        let obj = report.as_object().expect("report is an object");
        csv_rows(&["metric", "value"], obj.iter().map(|(key, v)| [key.clone(), v.to_string()]))
    };
    ctx.finish(report.clone(), csv, verified)
}

fn cmd_struct(ctx: &Context, subsets: usize) -> Result<Outcome> {
    let g = ctx.graph()?;
    let n = g.n();
    let cover = forest_decomposition(&g, &degeneracy(&g));
    let cover_ok = cover.verify(&g);
    let mut rng = rng::seeded(ctx.seed());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for i in 0..if n == 0 { 0 } else { subsets } {
        let size = 1 + rng::index(&mut rng, n);
        let mut all: Vec<Vertex> = (0..n).collect();
        for j in 0..size {
            all.swap(j, j + rng::index(&mut rng, n - j));
        }
        let u = &all[..size];
        match struct_subset(&g, u, &cover) {
            Ok(s) => rows.push([i.to_string(), size.to_string(), s.subset.len().to_string(), s.max_common.to_string(), "1".into()]),
            Err(e) => {
                rows.push([i.to_string(), size.to_string(), String::new(), String::new(), "0".into()]);
                failures.push(json!({ "subset": i, "size": size, "error": e.to_string() }));
            }
        }
    }
    let report = json!({
        "f": cover.f,
        "forest_sizes": (0..cover.f).map(|j| cover.forest(&g, j).len()).collect::<Vec<_>>(),
        "cover_ok": cover_ok,
        "subsets": rows.len(),
        "failures": failures,
    });
    let verified = cover_ok && failures.is_empty();
    let csv = || csv_rows(&["subset", "size", "kept", "max_common", "ok"], rows.clone());
    ctx.finish(report, csv, verified)
}
