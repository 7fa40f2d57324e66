//! Experiment runner: JSON configs, seeded repetitions, baselines, trace
//! files and summaries.
//!
//! An experiment directory looks like
//!
//! ```text
//! out/
//!   run_000.csv  run_001.csv  ...   one trace per repetition
//!   summary.csv                     one row of aggregate statistics
//!   meta/config.json                the resolved configuration
//!   meta/run_000.json  ...          timings, expansion history, status
//! ```
//!
//! Repetition `r` uses seed `seed + r`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::AcquisitionConfig;
use crate::bandits::{run_mab_with, MabSettings, StrategyConfig, StrategyKind, DEFAULT_ARMS};
use crate::benchmarks::{BaseFunction, HighDimFunction};
use crate::dsebo::{run_with_label, DseboConfig};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::optimizer::elapsed_ms;
use crate::rng;
use crate::trace::{read_csv, RunMeta, RunStatus, RunTrace};

/// Environment variable with the number of worker threads for parallel
/// repetitions (`0` or unset: one per core).
pub const THREADS_ENV: &str = "DSEBO_THREADS";

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "label,runs,convergence_mean,convergence_std,best_solution,time_mean_s";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str =
    "param,value,runs,convergence_mean,convergence_std,best_solution,time_mean_s,mean_delta_d";
const META_DIR: &str = "meta";

/// First 16 hex digits of the SHA-256 of `text`.
pub fn digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    hash.iter().take(8).fold(String::with_capacity(16), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Overrides for the expanding controller; unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DseboParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MabParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucb_e_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

/// Surrogate and acquisition settings shared by every model-based algorithm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_uniform: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_local: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_sigma_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refit_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
}

/// A complete experiment description.
///
/// ```json
/// { "function": "sphere", "dim": 1000, "d_f": 30, "algorithm": "dsebo",
///   "budget": 500, "repetitions": 5, "seed": 0 }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base function name, e.g. `"levy"`.
    pub function: String,
    /// Ambient dimension `D`.
    pub dim: usize,
    /// Effective (base function) dimension.
    pub d_f: usize,
    #[serde(default = "default_shift")]
    pub c: f64,
    #[serde(default = "default_penalty")]
    pub k: f64,
    /// `dsebo`, `fixed_embedding`, `random_search` or `mab:<strategy>`.
    pub algorithm: String,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Subspace dimension of `fixed_embedding`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub dsebo: DseboParams,
    #[serde(default, skip_serializing_if = "is_default")]
    pub mab: MabParams,
    #[serde(default, skip_serializing_if = "is_default")]
    pub model: ModelParams,
    /// Run repetitions on a thread pool.
    #[serde(default)]
    pub parallel: bool,
    /// Output directory used when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_shift() -> f64 {
    0.1
}
fn default_penalty() -> f64 {
    1e4
}
fn default_budget() -> usize {
    500
}
fn default_repetitions() -> usize {
    10
}
fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Dsebo,
    FixedEmbedding(usize),
    RandomSearch,
    Mab(StrategyKind),
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::Dsebo => "dsebo".into(),
            Algorithm::FixedEmbedding(d) => format!("fixed_embedding(d={d})"),
            Algorithm::RandomSearch => "random_search".into(),
            Algorithm::Mab(kind) => format!("mab:{kind}"),
        }
    }
}

impl ExperimentConfig {
    /// Defaults for everything but the required fields.
    pub fn new(function: &str, dim: usize, d_f: usize, algorithm: &str) -> Self {
        Self {
            function: function.into(),
            dim,
            d_f,
            c: default_shift(),
            k: default_penalty(),
            algorithm: algorithm.into(),
            budget: default_budget(),
            repetitions: default_repetitions(),
            seed: 0,
            fixed_dim: None,
            dsebo: DseboParams::default(),
            mab: MabParams::default(),
            model: ModelParams::default(),
            parallel: false,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn objective(&self) -> Result<HighDimFunction> {
        let base = BaseFunction::by_name(&self.function, self.d_f)?;
        HighDimFunction::new(base, self.dim, self.c, self.k)
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        let alg = match self.algorithm.as_str() {
            "dsebo" => Algorithm::Dsebo,
            "random_search" => Algorithm::RandomSearch,
            "fixed_embedding" => {
                let d = self.fixed_dim.ok_or_else(|| {
                    Error::Config("fixed_embedding needs `fixed_dim`".into())
                })?;
                Algorithm::FixedEmbedding(d)
            }
            other => match other.strip_prefix("mab:") {
                Some(name) => Algorithm::Mab(StrategyKind::from_str(name)?),
                None => {
                    return Err(Error::Config(format!(
                        "unknown algorithm {other:?}; expected dsebo, fixed_embedding, random_search or mab:<strategy>"
                    )))
                }
            },
        };
        Ok(alg)
    }

    pub fn acquisition(&self) -> AcquisitionConfig {
        let d = AcquisitionConfig::default();
        let m = &self.model;
        AcquisitionConfig {
            delta: m.delta.unwrap_or(d.delta),
            n_uniform: m.n_uniform.unwrap_or(d.n_uniform),
            n_local: m.n_local.unwrap_or(d.n_local),
            local_sigma_scale: m.local_sigma_scale.unwrap_or(d.local_sigma_scale),
        }
    }

    /// Controller settings for repetition seed `seed`.
    pub fn dsebo_config(&self, seed: u64) -> DseboConfig {
        let mut cfg = DseboConfig::for_dimension(self.dim, self.budget, seed);
        let p = &self.dsebo;
        if let Some(v) = p.d_h {
            cfg.d_h = v;
            cfg.d_l = cfg.d_l.min(v);
        }
        if let Some(v) = p.d_l {
            cfg.d_l = v;
        }
        if let Some(v) = p.beta {
            cfg.beta = v;
        }
        if let Some(v) = p.alpha_threshold {
            cfg.alpha_threshold = v;
        }
        cfg.acquisition = self.acquisition();
        if let Some(v) = self.model.refit_every {
            cfg.refit_every = v;
        }
        if let Some(v) = self.model.restarts {
            cfg.restarts = v;
        }
        cfg
    }

    fn fixed_config(&self, d: usize, seed: u64) -> DseboConfig {
        DseboConfig {
            d_l: d,
            d_h: d,
            ..self.dsebo_config(seed)
        }
    }

    fn strategy(&self, kind: StrategyKind) -> StrategyConfig {
        let d = StrategyConfig::new(kind);
        StrategyConfig {
            kind,
            epsilon: self.mab.epsilon.unwrap_or(d.epsilon),
            ucb_e_c: self.mab.ucb_e_c.unwrap_or(d.ucb_e_c),
            tau: self.mab.tau.unwrap_or(d.tau),
        }
    }

    fn arms(&self) -> Vec<usize> {
        self.mab
            .arms
            .clone()
            .unwrap_or_else(|| DEFAULT_ARMS.iter().copied().filter(|&d| d <= self.dim).collect())
    }

    fn mab_settings(&self) -> MabSettings {
        let d = MabSettings::default();
        MabSettings {
            acquisition: self.acquisition(),
            refit_every: self.model.refit_every.unwrap_or(d.refit_every),
            restarts: self.model.restarts.unwrap_or(d.restarts),
        }
    }

    /// Checks every name and parameter without evaluating anything.
    pub fn validate(&self) -> Result<Algorithm> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        self.objective()?;
        let alg = self.algorithm()?;
        match alg {
            Algorithm::Dsebo => self.dsebo_config(self.seed).validate(self.dim)?,
            Algorithm::FixedEmbedding(d) => self.fixed_config(d, self.seed).validate(self.dim)?,
            Algorithm::RandomSearch => {}
            Algorithm::Mab(kind) => {
                self.strategy(kind).validate()?;
                self.mab_settings().acquisition.validate()?;
                let arms = self.arms();
                if arms.is_empty() {
                    return Err(Error::Config("bandit needs at least one arm".into()));
                }
                if let Some(d) = arms.iter().find(|&&d| d == 0 || d > self.dim) {
                    return Err(Error::Config(format!("arm dimension {d} outside [1, {}]", self.dim)));
                }
                if self.budget < arms.len() {
                    return Err(Error::Config(format!(
                        "budget {} cannot cover one pull for each of {} arms",
                        self.budget,
                        arms.len()
                    )));
                }
            }
        }
        Ok(alg)
    }

    /// Runs a single repetition with the given seed.
    pub fn run_once(&self, seed: u64) -> Result<RunTrace> {
        let alg = self.validate()?;
        let objective = self.objective()?;
        let mut trace = match alg {
            Algorithm::Dsebo => run_with_label(&objective, &self.dsebo_config(seed), &mut (), "dsebo")?,
            Algorithm::FixedEmbedding(d) => {
                run_with_label(&objective, &self.fixed_config(d, seed), &mut (), "fixed_embedding")?
            }
            Algorithm::RandomSearch => run_random_search(&objective, self.budget, seed)?,
            Algorithm::Mab(kind) => run_mab_with(
                &objective,
                &self.arms(),
                self.strategy(kind),
                self.budget,
                seed,
                &self.mab_settings(),
            )?,
        };
        trace.algorithm = alg.label();
        Ok(trace)
    }
}

/// Bayesian optimization in one fixed random subspace of dimension `d`.
///
/// Equivalent to the expanding controller with `d_l = d_h = d`.
pub fn run_fixed_embedding(objective: &dyn Objective, d: usize, budget: usize, seed: u64) -> Result<RunTrace> {
    let cfg = DseboConfig {
        d_l: d,
        d_h: d,
        ..DseboConfig::for_dimension(objective.dim(), budget, seed)
    };
    run_fixed_embedding_with(objective, &cfg)
}

/// As [`run_fixed_embedding`], taking the dimension from `cfg.d_l`.
pub fn run_fixed_embedding_with(objective: &dyn Objective, cfg: &DseboConfig) -> Result<RunTrace> {
    let cfg = DseboConfig { d_h: cfg.d_l, ..*cfg };
    run_with_label(objective, &cfg, &mut (), "fixed_embedding")
}

/// Uniform sampling of the ambient box.
pub fn run_random_search(objective: &dyn Objective, budget: usize, seed: u64) -> Result<RunTrace> {
    if budget == 0 {
        return Err(Error::Config("budget must be at least 1".into()));
    }
    let dim = objective.dim();
    let bounds = objective.bounds();
    let mut rng = rng::stream(seed, rng::SEARCH);
    let mut trace = RunTrace::new("random_search", seed);
    trace.config_digest = digest(&format!("random_search:{dim}:{bounds:?}:{budget}:{seed}"));
    let start = Instant::now();
    for i in 0..budget {
        let x = bounds.sample(dim, &mut rng);
        let y = objective.evaluate(&x);
        if !y.is_finite() {
            trace.status = RunStatus::Aborted(format!("objective returned {y} at evaluation {}", i + 1));
            break;
        }
        trace.record(dim, y, elapsed_ms(&start));
    }
    trace.total_ms = elapsed_ms(&start);
    Ok(trace)
}

/// Aggregate statistics over the repetitions of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub label: String,
    pub runs: usize,
    /// Mean of the per-run final best values.
    pub convergence_mean: f64,
    /// Sample standard deviation of the final best values (0 for one run).
    pub convergence_std: f64,
    /// Smallest final best over all runs.
    pub best_solution: f64,
    /// Mean wall-clock time per run in seconds.
    pub time_mean_s: f64,
}

impl Summary {
    pub fn from_runs(label: impl Into<String>, finals: &[f64], times_s: &[f64]) -> Result<Self> {
        if finals.is_empty() {
            return Err(Error::Data("no completed runs to summarize".into()));
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = if finals.len() > 1 {
            (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let time = if times_s.is_empty() {
            f64::NAN
        } else {
            times_s.iter().sum::<f64>() / times_s.len() as f64
        };
        Ok(Self {
            label: label.into(),
            runs: finals.len(),
            convergence_mean: mean,
            convergence_std: std,
            best_solution: finals.iter().copied().fold(f64::INFINITY, f64::min),
            time_mean_s: time,
        })
    }

    fn fields(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?}",
            self.runs, self.convergence_mean, self.convergence_std, self.best_solution, self.time_mean_s
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{SUMMARY_HEADER}\n{},{}\n", self.label, self.fields())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |what: &str| Error::Data(format!("{}: {what}", path.display()));
        let mut lines = text.lines();
        if lines.next() != Some(SUMMARY_HEADER) {
            return Err(bad("unexpected summary header"));
        }
        let row = lines.next().ok_or_else(|| bad("missing summary row"))?;
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 6 {
            return Err(bad("summary row must have 6 columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
        Ok(Self {
            label: cols[0].to_string(),
            runs: cols[1].parse().map_err(|_| bad("bad run count"))?,
            convergence_mean: num(cols[2])?,
            convergence_std: num(cols[3])?,
            best_solution: num(cols[4])?,
            time_mean_s: num(cols[5])?,
        })
    }
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: Summary,
    pub traces: Vec<RunTrace>,
}

impl ExperimentOutcome {
    /// Mean expansion step over every run (`None` when nothing expanded).
    pub fn mean_delta_d(&self) -> Option<f64> {
        let steps: Vec<usize> = self
            .traces
            .iter()
            .flat_map(|t| t.expansions.steps.iter().map(|s| s.delta))
            .collect();
        (!steps.is_empty()).then(|| steps.iter().sum::<usize>() as f64 / steps.len() as f64)
    }
}

pub fn trace_file_name(rep: usize) -> String {
    format!("run_{rep:03}.csv")
}

fn meta_file_name(rep: usize) -> String {
    format!("run_{rep:03}.json")
}

fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn prepare_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out.join(META_DIR)).map_err(|e| Error::io(out, e))
}

/// Runs every repetition of `cfg`, writing traces and a summary under `out`.
///
/// Names and parameters are checked and the output directory is created
/// before any evaluation. If a run aborts on a data or numerical error, all
/// files are still written and the error is returned afterwards.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let alg = cfg.validate()?;
    let threads = if cfg.parallel { Some(thread_count()?) } else { None };
    prepare_dir(out)?;
    let config_path = out.join(META_DIR).join("config.json");
    fs::write(&config_path, cfg.to_json()).map_err(|e| Error::io(&config_path, e))?;

    let run_one = |rep: usize| -> Result<RunTrace> {
        let trace = cfg.run_once(cfg.seed + rep as u64)?;
        trace.write_csv(&out.join(trace_file_name(rep)))?;
        trace.write_meta(&out.join(META_DIR).join(meta_file_name(rep)))?;
        Ok(trace)
    };
    let traces: Vec<RunTrace> = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
            pool.install(|| (0..cfg.repetitions).into_par_iter().map(run_one).collect::<Result<_>>())?
        }
        None => (0..cfg.repetitions).map(run_one).collect::<Result<_>>()?,
    };

    let finals: Vec<f64> = traces.iter().filter_map(RunTrace::final_best).collect();
    let times: Vec<f64> = traces.iter().map(|t| t.total_ms / 1e3).collect();
    let summary = Summary::from_runs(alg.label(), &finals, &times)?;
    let summary_path = out.join(SUMMARY_FILE);
    fs::write(&summary_path, summary.to_csv()).map_err(|e| Error::io(&summary_path, e))?;

    if let Some((rep, RunStatus::Aborted(msg))) =
        traces.iter().map(|t| &t.status).enumerate().find(|(_, s)| !matches!(s, RunStatus::Completed))
    {
        return Err(Error::Data(format!("run {rep} aborted: {msg}")));
    }
    Ok(ExperimentOutcome { summary, traces })
}

/// Recomputes the summary of an experiment directory from its trace files.
///
/// When the directory already holds a summary, the two must agree to 1e-12
/// (run counts and labels exactly).
pub fn summarize(dir: &Path) -> Result<Summary> {
    let mut reps = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(rep) = name
            .strip_prefix("run_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            reps.push(rep);
        }
    }
    reps.sort_unstable();
    if reps.is_empty() {
        return Err(Error::Data(format!("{}: no trace files", dir.display())));
    }

    let mut finals = Vec::with_capacity(reps.len());
    let mut times = Vec::with_capacity(reps.len());
    let mut label = None;
    for &rep in &reps {
        let rows = read_csv(&dir.join(trace_file_name(rep)))?;
        let last = rows
            .last()
            .ok_or_else(|| Error::Data(format!("{}: empty trace", trace_file_name(rep))))?;
        finals.push(last.best);
        let meta_path = dir.join(META_DIR).join(meta_file_name(rep));
        if meta_path.exists() {
            let meta = RunMeta::read(&meta_path)?;
            times.push(meta.total_ms / 1e3);
            label.get_or_insert(meta.algorithm);
        }
    }
    let summary_path = dir.join(SUMMARY_FILE);
    let existing = summary_path.exists().then(|| Summary::read(&summary_path)).transpose()?;
    let label = label
        .or_else(|| existing.as_ref().map(|s| s.label.clone()))
        .unwrap_or_else(|| "unknown".into());
    let summary = Summary::from_runs(label, &finals, &times)?;

    if let Some(stored) = existing {
        let close = |a: f64, b: f64| (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12;
        let agrees = stored.label == summary.label
            && stored.runs == summary.runs
            && close(stored.convergence_mean, summary.convergence_mean)
            && close(stored.convergence_std, summary.convergence_std)
            && close(stored.best_solution, summary.best_solution)
            && (times.is_empty() || close(stored.time_mean_s, summary.time_mean_s));
        if !agrees {
            return Err(Error::Data(format!(
                "{} disagrees with the trace files: stored {stored:?}, recomputed {summary:?}",
                summary_path.display()
            )));
        }
    }
    Ok(summary)
}

/// Controller parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    DH,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::DH => "d_h",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(SweepParam::Beta),
            "d_h" => Ok(SweepParam::DH),
            _ => Err(Error::Config(format!("unknown sweep parameter {s:?}; expected beta or d_h"))),
        }
    }
}

/// One row of the cross-value sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub summary: Summary,
    pub mean_delta_d: Option<f64>,
}

fn sweep_config(cfg: &ExperimentConfig, param: SweepParam, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match param {
        SweepParam::Beta => c.dsebo.beta = Some(value),
        SweepParam::DH => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::Config(format!("d_h must be a positive integer, got {value}")));
            }
            c.dsebo.d_h = Some((value as usize).min(cfg.dim));
        }
    }
    c.validate()?;
    Ok(c)
}

/// Runs one experiment per value of a controller parameter, each in a
/// `<param>=<value>` subdirectory, and writes `sweep.csv` under `out`.
///
/// `d_h` values above the ambient dimension are clipped to it.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64], out: &Path) -> Result<Vec<SweepRow>> {
    if cfg.algorithm()? != Algorithm::Dsebo {
        return Err(Error::Config(format!(
            "{} sweeps need the dsebo algorithm, got {:?}",
            param.name(),
            cfg.algorithm
        )));
    }
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|&v| sweep_config(cfg, param, v))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut rows = Vec::with_capacity(values.len());
    for (c, &value) in configs.iter().zip(values) {
        let outcome = run_experiment(c, &out.join(format!("{}={value}", param.name())))?;
        rows.push(SweepRow {
            value,
            mean_delta_d: outcome.mean_delta_d(),
            summary: outcome.summary,
        });
    }
    let mut table = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        writeln!(
            table,
            "{},{},{},{:?}",
            param.name(),
            r.value,
            r.summary.fields(),
            r.mean_delta_d.unwrap_or(f64::NAN)
        )
        .unwrap();
    }
    let path = out.join(SWEEP_FILE);
    fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
