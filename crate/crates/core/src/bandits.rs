//! Multi-armed-bandit dimension selection.
//!
//! Each arm is a fixed subspace dimension with its own embedding matrix,
//! dataset and surrogate; arms never share observations. A strategy picks
//! which arm advances by one evaluation at every step. An arm's reward is
//! the negated best value it has found, so rewards only grow with pulls.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::acquisition::AcquisitionConfig;
use crate::dsebo::RunObserver;
use crate::embedding::{init_dataset, SharedEmbedding};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::optimizer::{elapsed_ms, evaluate_and_record, RefitPolicy, SubspaceOptimizer};
use crate::rng::{self, StreamRng};
use crate::trace::{RunStatus, RunTrace};

/// Arm dimensions used by default.
pub const DEFAULT_ARMS: [usize; 7] = [10, 20, 30, 50, 70, 90, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    EpsilonGreedy,
    CUcb,
    UcbE,
    Thompson,
    Softmax,
    SuccessiveHalving,
    Extreme,
    Expectation,
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::EpsilonGreedy,
        StrategyKind::CUcb,
        StrategyKind::UcbE,
        StrategyKind::Thompson,
        StrategyKind::Softmax,
        StrategyKind::SuccessiveHalving,
        StrategyKind::Extreme,
        StrategyKind::Expectation,
        StrategyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::EpsilonGreedy => "epsilon_greedy",
            StrategyKind::CUcb => "c_ucb",
            StrategyKind::UcbE => "ucb_e",
            StrategyKind::Thompson => "thompson",
            StrategyKind::Softmax => "softmax",
            StrategyKind::SuccessiveHalving => "successive_halving",
            StrategyKind::Extreme => "extreme",
            StrategyKind::Expectation => "expectation",
            StrategyKind::Random => "random",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown bandit strategy {s:?}; expected one of {names:?}"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Exploration probability of epsilon-greedy.
    pub epsilon: f64,
    /// Exploration constant of UCB-E.
    pub ucb_e_c: f64,
    /// Softmax temperature.
    pub tau: f64,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            epsilon: 0.5,
            ucb_e_c: 0.5,
            tau: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if !(self.ucb_e_c >= 0.0 && self.ucb_e_c.is_finite()) {
            return Err(Error::Config(format!("ucb_e_c must be non-negative, got {}", self.ucb_e_c)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Pull statistics of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmStats {
    pub pulls: usize,
    /// Running minimum of the objective values seen by this arm.
    pub best: f64,
    reward_sum: f64,
    max_reward: f64,
}

impl Default for ArmStats {
    fn default() -> Self {
        Self {
            pulls: 0,
            best: f64::INFINITY,
            reward_sum: 0.0,
            max_reward: f64::NEG_INFINITY,
        }
    }
}

impl ArmStats {
    /// Folds in one evaluation made by this arm.
    pub fn record(&mut self, value: f64) {
        self.pulls += 1;
        self.best = self.best.min(value);
        let r = -self.best;
        self.reward_sum += r;
        self.max_reward = self.max_reward.max(r);
    }

    /// Current reward (negated best value), `None` before the first pull.
    pub fn reward(&self) -> Option<f64> {
        (self.pulls > 0).then_some(-self.best)
    }

    /// Mean of the rewards observed after each pull.
    pub fn mean_reward(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum / self.pulls as f64)
    }

    /// Largest reward observed after any single pull.
    pub fn max_reward(&self) -> Option<f64> {
        (self.pulls > 0).then_some(self.max_reward)
    }
}

/// Negated best value of a pulled arm.
pub fn reward(arm: &ArmStats) -> Option<f64> {
    arm.reward()
}

#[derive(Debug, Clone)]
struct Halving {
    survivors: Vec<usize>,
    phase_len: usize,
    phase_pulls: Vec<usize>,
}

/// A strategy together with the state it carries between selections.
#[derive(Debug, Clone)]
pub struct Policy {
    cfg: StrategyConfig,
    halving: Option<Halving>,
}

impl Policy {
    /// `budget` sizes the successive-halving phases:
    /// `budget / (arms * ceil(log2 arms))` pulls per surviving arm.
    pub fn new(cfg: StrategyConfig, n_arms: usize, budget: usize) -> Result<Self> {
        cfg.validate()?;
        if n_arms == 0 {
            return Err(Error::Config("bandit needs at least one arm".into()));
        }
        let halving = (cfg.kind == StrategyKind::SuccessiveHalving).then(|| {
            let rounds = (n_arms as f64).log2().ceil().max(1.0) as usize;
            Halving {
                survivors: (0..n_arms).collect(),
                phase_len: (budget / (n_arms * rounds)).max(1),
                phase_pulls: vec![0; n_arms],
            }
        });
        Ok(Self { cfg, halving })
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.cfg
    }

    /// Arms still eligible under successive halving (all arms otherwise).
    pub fn survivors(&self, n_arms: usize) -> Vec<usize> {
        self.halving
            .as_ref()
            .map_or_else(|| (0..n_arms).collect(), |h| h.survivors.clone())
    }

    /// Picks the arm to pull at global step `t` (evaluations made so far).
    ///
    /// An arm that was never pulled is chosen first.
    pub fn select_arm<R: Rng + ?Sized>(&mut self, arms: &[ArmStats], t: usize, rng: &mut R) -> Result<usize> {
        if arms.is_empty() {
            return Err(Error::Config("bandit needs at least one arm".into()));
        }
        if let Some(i) = arms.iter().position(|a| a.pulls == 0) {
            return Ok(i);
        }
        let mean = |a: &ArmStats| a.mean_reward().expect("pulled");
        let choice = match self.cfg.kind {
            StrategyKind::EpsilonGreedy => {
                if rng.gen::<f64>() < self.cfg.epsilon {
                    rng.gen_range(0..arms.len())
                } else {
                    argmax(arms.iter().map(mean))
                }
            }
            StrategyKind::CUcb => {
                let ln_t = (t.max(1) as f64).ln();
                argmax(arms.iter().map(|a| mean(a) + (2.0 * ln_t / a.pulls as f64).sqrt()))
            }
            StrategyKind::UcbE => {
                argmax(arms.iter().map(|a| mean(a) + (self.cfg.ucb_e_c / a.pulls as f64).sqrt()))
            }
            StrategyKind::Softmax => {
                let scores: Vec<f64> = arms.iter().map(|a| mean(a) / self.cfg.tau).collect();
                let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
                sample_weighted(&weights, rng)
            }
            StrategyKind::Thompson => {
                let draws: Vec<f64> = arms
                    .iter()
                    .map(|a| {
                        let sd = (1.0 / a.pulls as f64).sqrt();
                        Normal::new(mean(a), sd).expect("finite").sample(rng)
                    })
                    .collect();
                argmax(draws.into_iter())
            }
            StrategyKind::SuccessiveHalving => {
                let h = self.halving.as_mut().expect("halving state");
                h.select(arms)
            }
            StrategyKind::Extreme => argmax(arms.iter().map(|a| a.max_reward().expect("pulled"))),
            StrategyKind::Expectation => argmax(arms.iter().map(mean)),
            StrategyKind::Random => rng.gen_range(0..arms.len()),
        };
        Ok(choice)
    }
}

impl Halving {
    fn select(&mut self, arms: &[ArmStats]) -> usize {
        if self.survivors.len() > 1
            && self.survivors.iter().all(|&i| self.phase_pulls[i] >= self.phase_len)
        {
            let mut ranked = self.survivors.clone();
            ranked.sort_by(|&a, &b| {
                let (ra, rb) = (arms[a].reward().unwrap(), arms[b].reward().unwrap());
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            ranked.truncate(ranked.len().div_ceil(2));
            ranked.sort_unstable();
            self.survivors = ranked;
            for p in &mut self.phase_pulls {
                *p = 0;
            }
        }
        if self.survivors.len() == 1 {
            return self.survivors[0];
        }
        let pick = *self
            .survivors
            .iter()
            .min_by_key(|&&i| (self.phase_pulls[i], i))
            .expect("survivors non-empty");
        self.phase_pulls[pick] += 1;
        pick
    }
}

/// First index of the largest value.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// One arm: a fixed-dimension embedding optimizer and its statistics.
pub struct Arm {
    pub dim: usize,
    pub stats: ArmStats,
    embedding: SharedEmbedding,
    optimizer: Option<SubspaceOptimizer>,
    init_rng: StreamRng,
}

impl fmt::Debug for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Arm")
            .field("dim", &self.dim)
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl Arm {
    fn new(index: usize, dim: usize, ambient_dim: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            dim,
            stats: ArmStats::default(),
            embedding: SharedEmbedding::with_stream(
                ambient_dim,
                dim,
                seed,
                rng::arm_stream(index, rng::EMBEDDING),
            )?,
            optimizer: None,
            init_rng: rng::stream(seed, rng::arm_stream(index, rng::INIT)),
        })
    }

    pub fn embedding(&self) -> &SharedEmbedding {
        &self.embedding
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MabSettings {
    pub acquisition: AcquisitionConfig,
    pub refit_every: usize,
    pub restarts: usize,
}

impl Default for MabSettings {
    fn default() -> Self {
        Self {
            acquisition: AcquisitionConfig::default(),
            refit_every: 25,
            restarts: 3,
        }
    }
}

/// Runs a bandit over independent fixed-dimension optimizers.
///
/// Every arm is pulled once first (its random initial point); afterwards
/// the strategy chooses. Exactly `budget` evaluations are made.
pub fn run_mab(
    objective: &dyn Objective,
    arm_dims: &[usize],
    strategy: StrategyConfig,
    budget: usize,
    seed: u64,
) -> Result<RunTrace> {
    run_mab_with(objective, arm_dims, strategy, budget, seed, &MabSettings::default())
}

pub fn run_mab_with(
    objective: &dyn Objective,
    arm_dims: &[usize],
    strategy: StrategyConfig,
    budget: usize,
    seed: u64,
    settings: &MabSettings,
) -> Result<RunTrace> {
    let ambient_dim = objective.dim();
    if arm_dims.is_empty() {
        return Err(Error::Config("bandit needs at least one arm".into()));
    }
    if let Some(d) = arm_dims.iter().find(|&&d| d == 0 || d > ambient_dim) {
        return Err(Error::Config(format!(
            "arm dimension {d} outside [1, {ambient_dim}]"
        )));
    }
    if budget < arm_dims.len() {
        return Err(Error::Config(format!(
            "budget {budget} cannot cover one warm-up pull for each of {} arms",
            arm_dims.len()
        )));
    }
    settings.acquisition.validate()?;
    let mut policy = Policy::new(strategy, arm_dims.len(), budget)?;
    let mut arms = arm_dims
        .iter()
        .enumerate()
        .map(|(i, &d)| Arm::new(i, d, ambient_dim, seed))
        .collect::<Result<Vec<_>>>()?;

    let label = format!("mab:{}", strategy.kind);
    let mut trace = RunTrace::new(label.clone(), seed);
    trace.config_digest =
        crate::harness::digest(&format!("{label}:{ambient_dim}:{arm_dims:?}:{strategy:?}:{budget}:{settings:?}"));
    let start = Instant::now();
    let outcome = drive(objective, &mut arms, &mut policy, budget, seed, settings, &mut trace, &start);
    trace.total_ms = elapsed_ms(&start);
    trace.arm_pulls = arms.iter().map(|a| a.stats.pulls).collect();
    if let Err(e) = outcome {
        match e {
            Error::Data(_) | Error::Numerical(_) => trace.status = RunStatus::Aborted(e.to_string()),
            other => return Err(other),
        }
    }
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn drive(
    objective: &dyn Objective,
    arms: &mut [Arm],
    policy: &mut Policy,
    budget: usize,
    seed: u64,
    settings: &MabSettings,
    trace: &mut RunTrace,
    start: &Instant,
) -> Result<()> {
    let bounds = objective.bounds();
    let mut policy_rng = rng::stream(seed, rng::POLICY);
    let policy_refit = RefitPolicy {
        every: settings.refit_every,
        restarts: settings.restarts,
    };
    let observer: &mut dyn RunObserver = &mut ();

    for (i, arm) in arms.iter_mut().enumerate() {
        let map = arm.embedding.slice(arm.dim)?;
        let ds = init_dataset(None, arm.dim, &mut arm.init_rng, |z| {
            evaluate_and_record(objective, &map, &bounds, z, trace, start)
        })?;
        arm.stats.record(ds.values()[0]);
        arm.optimizer = Some(SubspaceOptimizer::new(
            ds,
            policy_refit,
            settings.acquisition,
            rng::stream(seed, rng::arm_stream(i, rng::ACQUISITION)),
            rng::stream(seed, rng::arm_stream(i, rng::HYPERPARAMS)),
        ));
    }

    while trace.len() < budget {
        let stats: Vec<ArmStats> = arms.iter().map(|a| a.stats).collect();
        let idx = policy.select_arm(&stats, trace.len(), &mut policy_rng)?;
        let arm = &mut arms[idx];
        let map = arm.embedding.slice(arm.dim)?;
        let opt = arm.optimizer.as_mut().expect("warmed up");
        let z = opt.suggest(observer)?;
        let y = evaluate_and_record(objective, &map, &bounds, &z, trace, start)?;
        opt.observe(z, y)?;
        arm.stats.record(y);
    }
    Ok(())
}
