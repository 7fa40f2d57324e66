//! One Bayesian-optimization instance confined to a single subspace.
//! Shared by the expanding controller, the fixed-dimension baseline and
//! every bandit arm.

use std::time::Instant;

use crate::acquisition::{kappa_schedule, propose, AcquisitionConfig, SubspaceBox};
use crate::dsebo::RunObserver;
use crate::embedding::{embed, AmbientBox, EmbeddingMap, SubspaceDataset, SubspacePoint};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::rng::StreamRng;
use crate::surrogate::{fit_gp, GpModel, KernelParams};
use crate::trace::RunTrace;

/// How often hyperparameters get a wide multi-start search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RefitPolicy {
    pub every: usize,
    pub restarts: usize,
}

pub(crate) struct SubspaceOptimizer {
    dataset: SubspaceDataset,
    params: Option<KernelParams>,
    fits: usize,
    policy: RefitPolicy,
    acquisition: AcquisitionConfig,
    acq_rng: StreamRng,
    fit_rng: StreamRng,
}

impl SubspaceOptimizer {
    pub fn new(
        dataset: SubspaceDataset,
        policy: RefitPolicy,
        acquisition: AcquisitionConfig,
        acq_rng: StreamRng,
        fit_rng: StreamRng,
    ) -> Self {
        Self {
            dataset,
            params: None,
            fits: 0,
            policy,
            acquisition,
            acq_rng,
            fit_rng,
        }
    }

    pub fn dataset(&self) -> &SubspaceDataset {
        &self.dataset
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    /// Moves to a new dataset (a larger subspace); the next fit starts cold.
    pub fn replace_dataset(&mut self, dataset: SubspaceDataset) {
        self.dataset = dataset;
        self.params = None;
        self.fits = 0;
    }

    fn fit(&mut self) -> Result<GpModel> {
        let wide = self.params.is_none() || self.fits % self.policy.every.max(1) == 0;
        let restarts = if wide { self.policy.restarts } else { 0 };
        let model = fit_gp(&self.dataset, self.params.as_ref(), restarts, &mut self.fit_rng)?;
        self.params = Some(*model.params());
        self.fits += 1;
        Ok(model)
    }

    /// Fits the surrogate and returns the next point to evaluate.
    pub fn suggest(&mut self, observer: &mut dyn RunObserver) -> Result<SubspacePoint> {
        let model = self.fit()?;
        observer.on_fit(&self.dataset, &model);
        let d = self.dim();
        let kappa = kappa_schedule(self.dataset.len(), d, self.acquisition.delta);
        let (best_idx, _) = self.dataset.best().expect("dataset is never empty");
        let incumbent = self.dataset.points()[best_idx].clone();
        let proposal = propose(
            &model,
            &SubspaceBox::new(d),
            &incumbent,
            kappa,
            &self.acquisition,
            &mut self.acq_rng,
        )?;
        Ok(proposal.point)
    }

    pub fn observe(&mut self, z: SubspacePoint, y: f64) -> Result<()> {
        self.dataset.push(z, y)
    }
}

/// Embeds `z`, evaluates it and records the row; non-finite values become
/// data errors before anything is recorded.
pub(crate) fn evaluate_and_record(
    objective: &dyn Objective,
    map: &EmbeddingMap<'_>,
    bounds: &AmbientBox,
    z: &SubspacePoint,
    trace: &mut RunTrace,
    start: &Instant,
) -> Result<f64> {
    let x = embed(map, z, bounds)?;
    let y = objective.evaluate(&x);
    if !y.is_finite() {
        return Err(Error::Data(format!(
            "objective returned {y} at evaluation {}",
            trace.len() + 1
        )));
    }
    trace.record(map.dim(), y, elapsed_ms(start));
    Ok(y)
}

pub(crate) fn elapsed_ms(start: &Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}
