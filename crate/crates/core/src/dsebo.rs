//! The dimension-expanding controller.
//!
//! Optimization starts in a `d_l`-dimensional subspace. When the best value
//! found in the current subspace has not improved by more than
//! `alpha_threshold` for `T` consecutive evaluations, the subspace is
//! considered converged: its `(dimension, best value)` pair is recorded and
//! the dimension grows by a step that is rescaled from the previous step
//! according to how much the most recent expansion paid off. The dataset
//! is carried into the new subspace by zero-padding.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionConfig;
use crate::embedding::{init_dataset, SharedEmbedding, SubspaceDataset};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::optimizer::{elapsed_ms, evaluate_and_record, RefitPolicy, SubspaceOptimizer};
use crate::rng;
use crate::surrogate::GpModel;
use crate::trace::{RunStatus, RunTrace};

/// Best value reached in one completed subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceRecord {
    pub dim: usize,
    pub best: f64,
}

/// One dimension switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStep {
    /// Evaluation after which the switch happened.
    pub iteration: usize,
    pub from: usize,
    pub to: usize,
    /// Increment chosen by the controller, before capping at `d_h`.
    pub delta: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpansionHistory {
    pub records: Vec<SubspaceRecord>,
    pub steps: Vec<ExpansionStep>,
}

impl ExpansionHistory {
    /// Appends a completed subspace; dimensions must strictly increase.
    pub fn push_record(&mut self, dim: usize, best: f64) -> Result<()> {
        if let Some(last) = self.records.last() {
            if dim <= last.dim {
                return Err(Error::Usage(format!(
                    "subspace dimension {dim} does not exceed previous {}",
                    last.dim
                )));
            }
        }
        self.records.push(SubspaceRecord { dim, best });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean controller increment over all switches, if any happened.
    pub fn mean_delta(&self) -> Option<f64> {
        if self.steps.is_empty() {
            return None;
        }
        Some(self.steps.iter().map(|s| s.delta as f64).sum::<f64>() / self.steps.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DseboConfig {
    /// Initial (smallest) subspace dimension.
    pub d_l: usize,
    /// Largest subspace dimension; also the column count of the shared matrix.
    pub d_h: usize,
    /// Expansion scale: larger values mean smaller, more frequent expansions.
    pub beta: f64,
    /// Total objective evaluations, including the random initial point.
    pub budget: usize,
    /// Improvement of the subspace best needed to count as progress.
    pub alpha_threshold: f64,
    pub seed: u64,
    pub acquisition: AcquisitionConfig,
    /// Every `refit_every`-th surrogate fit uses `restarts` random restarts.
    pub refit_every: usize,
    pub restarts: usize,
}

impl DseboConfig {
    /// Recommended settings for an ambient dimension: `d_l = 5`,
    /// `d_h = min(D, 100)`, `beta = 12`, threshold `0.5`.
    pub fn for_dimension(ambient_dim: usize, budget: usize, seed: u64) -> Self {
        let d_h = ambient_dim.min(100);
        Self {
            d_l: 5.min(d_h),
            d_h,
            beta: 12.0,
            budget,
            alpha_threshold: 0.5,
            seed,
            acquisition: AcquisitionConfig::default(),
            refit_every: 25,
            restarts: 3,
        }
    }

    pub fn validate(&self, ambient_dim: usize) -> Result<()> {
        if !(1 <= self.d_l && self.d_l <= self.d_h && self.d_h <= ambient_dim) {
            return Err(Error::Config(format!(
                "dimension range must satisfy 1 <= d_l <= d_h <= D, got d_l={}, d_h={}, D={ambient_dim}",
                self.d_l, self.d_h
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if !(self.alpha_threshold >= 0.0 && self.alpha_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "alpha_threshold must be non-negative, got {}",
                self.alpha_threshold
            )));
        }
        if self.refit_every == 0 {
            return Err(Error::Config("refit_every must be at least 1".into()));
        }
        self.acquisition.validate()
    }

    fn refit_policy(&self) -> RefitPolicy {
        RefitPolicy {
            every: self.refit_every,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub d_current: usize,
    /// Increment used at the previous switch (0 before the first).
    pub delta_d: usize,
    /// Convergence threshold `T` of the current subspace.
    pub threshold: usize,
    /// Evaluations since the last significant improvement.
    pub stall_counter: usize,
    /// Reference value that improvements are measured against.
    pub reference: f64,
}

/// `T = floor((1 + (d - d_l) / (d_h - d_l)) * budget / (2 beta))`, at least 1.
/// The fraction is taken as 0 when `d_h == d_l`.
pub fn convergence_threshold(dim: usize, cfg: &DseboConfig) -> usize {
    let frac = if cfg.d_h == cfg.d_l {
        0.0
    } else {
        (dim.saturating_sub(cfg.d_l)) as f64 / (cfg.d_h - cfg.d_l) as f64
    };
    let t = ((1.0 + frac) * cfg.budget as f64 / (2.0 * cfg.beta)).floor();
    (t as usize).max(1)
}

/// Slack added before flooring `k * delta` so that products which are
/// integers in exact arithmetic are not rounded down by float error.
const FLOOR_SLACK: f64 = 1e-9;

/// Chooses the next subspace dimension and increment.
///
/// With fewer than two completed subspaces the increment is
/// `floor((d_h - d_l) / beta)`. Otherwise the improvement slopes
/// `s_i = -(b_{i+1} - b_i) / (d_{i+1} - d_i)` are min-max normalized, the
/// latest one is mapped to `k` in `[0.5, 1.5]`, and the previous increment
/// is scaled by `k` (kept unchanged when all slopes coincide). Increments
/// never drop below 1 and the result is capped at `d_h`.
pub fn next_dimension(
    hist: &ExpansionHistory,
    state: &ControllerState,
    cfg: &DseboConfig,
) -> Result<(usize, usize)> {
    if state.d_current >= cfg.d_h {
        return Err(Error::Usage(format!(
            "cannot expand beyond d_h={} (current dimension {})",
            cfg.d_h, state.d_current
        )));
    }
    let records = &hist.records;
    let delta = if records.len() < 2 {
        ((cfg.d_h - cfg.d_l) as f64 / cfg.beta).floor() as usize
    } else {
        let slopes: Vec<f64> = records
            .windows(2)
            .map(|w| -(w[1].best - w[0].best) / (w[1].dim as f64 - w[0].dim as f64))
            .collect();
        let s_min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let s_max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s_last = *slopes.last().unwrap();
        if s_min == s_max {
            state.delta_d
        } else {
            let k = (s_last - s_min) / (s_max - s_min) + 0.5;
            (k * state.delta_d as f64 + FLOOR_SLACK).floor() as usize
        }
    };
    let delta = delta.max(1);
    Ok(((state.d_current + delta).min(cfg.d_h), delta))
}

/// Hooks into a running optimization, for diagnostics and tests.
pub trait RunObserver {
    /// Called after every surrogate fit with the data it was fitted to.
    fn on_fit(&mut self, _data: &SubspaceDataset, _model: &GpModel) {}
}

impl RunObserver for () {}

/// Minimizes `objective` over its box with the dimension-expanding strategy.
///
/// Exactly `cfg.budget` evaluations are made (the random initial point
/// counts as the first). If the objective returns a non-finite value or the
/// surrogate cannot be factorized, the run stops, the trace keeps the rows
/// recorded so far and its status is [`RunStatus::Aborted`].
pub fn run_dsebo(objective: &dyn Objective, cfg: &DseboConfig) -> Result<RunTrace> {
    run_dsebo_observed(objective, cfg, &mut ())
}

pub fn run_dsebo_observed(
    objective: &dyn Objective,
    cfg: &DseboConfig,
    observer: &mut dyn RunObserver,
) -> Result<RunTrace> {
    run_with_label(objective, cfg, observer, "dsebo")
}

pub(crate) fn run_with_label(
    objective: &dyn Objective,
    cfg: &DseboConfig,
    observer: &mut dyn RunObserver,
    label: &str,
) -> Result<RunTrace> {
    let ambient_dim = objective.dim();
    cfg.validate(ambient_dim)?;
    let emb = SharedEmbedding::new(ambient_dim, cfg.d_h, cfg.seed)?;
    let mut trace = RunTrace::new(label, cfg.seed);
    trace.config_digest = crate::harness::digest(&format!("{label}:{ambient_dim}:{cfg:?}"));
    let start = Instant::now();
    let outcome = drive(objective, cfg, &emb, &mut trace, &start, observer);
    trace.total_ms = elapsed_ms(&start);
    if let Err(e) = outcome {
        match e {
            Error::Data(_) | Error::Numerical(_) => trace.status = RunStatus::Aborted(e.to_string()),
            other => return Err(other),
        }
    }
    Ok(trace)
}

fn drive(
    objective: &dyn Objective,
    cfg: &DseboConfig,
    emb: &SharedEmbedding,
    trace: &mut RunTrace,
    start: &Instant,
    observer: &mut dyn RunObserver,
) -> Result<()> {
    let bounds = objective.bounds();
    let mut init_rng = rng::stream(cfg.seed, rng::INIT);

    let mut map = emb.slice(cfg.d_l)?;
    let dataset = init_dataset(None, cfg.d_l, &mut init_rng, |z| {
        evaluate_and_record(objective, &map, &bounds, z, trace, start)
    })?;
    let mut opt = SubspaceOptimizer::new(
        dataset,
        cfg.refit_policy(),
        cfg.acquisition,
        rng::stream(cfg.seed, rng::ACQUISITION),
        rng::stream(cfg.seed, rng::HYPERPARAMS),
    );

    let first = opt.dataset().values()[0];
    let mut state = ControllerState {
        d_current: cfg.d_l,
        delta_d: 0,
        threshold: convergence_threshold(cfg.d_l, cfg),
        stall_counter: 0,
        reference: first,
    };
    let mut subspace_best = first;

    while trace.len() < cfg.budget {
        let z = opt.suggest(observer)?;
        let y = evaluate_and_record(objective, &map, &bounds, &z, trace, start)?;
        opt.observe(z, y)?;
        subspace_best = subspace_best.min(y);

        if y < state.reference - cfg.alpha_threshold {
            state.reference = y;
            state.stall_counter = 0;
        } else {
            state.stall_counter += 1;
        }

        let converged = state.stall_counter >= state.threshold;
        if converged && state.d_current < cfg.d_h && trace.len() < cfg.budget {
            trace.expansions.push_record(state.d_current, subspace_best)?;
            let (next, delta) = next_dimension(&trace.expansions, &state, cfg)?;
            trace.expansions.steps.push(ExpansionStep {
                iteration: trace.len(),
                from: state.d_current,
                to: next,
                delta,
            });
            let carried = init_dataset(Some(opt.dataset()), next, &mut init_rng, |_| {
                unreachable!("carried datasets are never empty")
            })?;
            let (_, carried_best) = carried.best().expect("non-empty");
            opt.replace_dataset(carried);
            map = emb.slice(next)?;
            state = ControllerState {
                d_current: next,
                delta_d: delta,
                threshold: convergence_threshold(next, cfg),
                stall_counter: 0,
                reference: carried_best,
            };
            subspace_best = f64::INFINITY;
        }
    }
    Ok(())
}
