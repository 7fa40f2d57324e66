//! Lower-confidence-bound acquisition over the subspace box.
//!
//! All problems are minimized, so the usual upper confidence bound becomes
//! `mean - sqrt(kappa) * std`. The inner optimization scores a fixed,
//! seeded candidate set (uniform box samples followed by Gaussian
//! perturbations of the incumbent) and keeps the lowest bound.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::embedding::SubspacePoint;
pub use crate::embedding::SubspaceBox;
use crate::error::{Error, Result};
use crate::surrogate::GpModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionConfig {
    /// Confidence parameter of the exploration schedule, in `(0, 1)`.
    pub delta: f64,
    /// Uniform candidates per proposal.
    pub n_uniform: usize,
    /// Incumbent-perturbation candidates per proposal.
    pub n_local: usize,
    /// Per-coordinate perturbation std, as a fraction of `sqrt(d)`.
    pub local_sigma_scale: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            n_uniform: 1000,
            n_local: 1000,
            local_sigma_scale: 0.1,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.n_uniform + self.n_local == 0 {
            return Err(Error::Config("acquisition needs at least one candidate".into()));
        }
        if !(self.local_sigma_scale > 0.0 && self.local_sigma_scale.is_finite()) {
            return Err(Error::Config(format!(
                "local_sigma_scale must be positive, got {}",
                self.local_sigma_scale
            )));
        }
        Ok(())
    }
}

/// `kappa_t = 2 log(d t^2 pi^2 / (6 delta))`.
pub fn kappa_schedule(t: usize, dim: usize, delta: f64) -> f64 {
    let t = t.max(1) as f64;
    let d = dim.max(1) as f64;
    2.0 * (d * t * t * PI * PI / (6.0 * delta)).ln()
}

/// `mean - sqrt(kappa) * std`.
#[inline]
pub fn lcb(mean: f64, std: f64, kappa: f64) -> f64 {
    mean - kappa.max(0.0).sqrt() * std
}

/// Index of the smallest lower confidence bound; the earliest index wins ties.
pub fn argmin_lcb(means: &[f64], stds: &[f64], kappa: f64) -> Option<(usize, f64)> {
    means
        .iter()
        .zip(stds)
        .map(|(&m, &s)| lcb(m, s, kappa))
        .enumerate()
        .fold(None, |best, (i, v)| match best {
            Some((_, b)) if b <= v => best,
            _ => Some((i, v)),
        })
}

/// Row-major candidate set: `n_uniform` uniform samples, then `n_local`
/// clamped Gaussian perturbations of `incumbent`.
pub fn generate_candidates<R: Rng + ?Sized>(
    bx: &SubspaceBox,
    incumbent: &SubspacePoint,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = bx.dim();
    if incumbent.dim() != d {
        return Err(Error::Usage(format!(
            "incumbent has dimension {}, box has dimension {d}",
            incumbent.dim()
        )));
    }
    let h = bx.half_width();
    let mut out = Vec::with_capacity((cfg.n_uniform + cfg.n_local) * d);
    for _ in 0..cfg.n_uniform * d {
        out.push(rng.gen_range(-h..=h));
    }
    let sigma = cfg.local_sigma_scale * h;
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::Config(format!("local perturbation scale: {e}")))?;
    for _ in 0..cfg.n_local {
        for &c in incumbent.as_slice() {
            out.push(bx.clamp(c + noise.sample(rng)));
        }
    }
    Ok(out)
}

/// The chosen candidate and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: SubspacePoint,
    /// Position in the generated candidate set.
    pub index: usize,
    pub lcb: f64,
    pub mean: f64,
    pub std: f64,
}

/// Proposes the next subspace point by minimizing the lower confidence bound
/// of `model` over a seeded candidate set.
pub fn propose<R: Rng + ?Sized>(
    model: &GpModel,
    bx: &SubspaceBox,
    incumbent: &SubspacePoint,
    kappa: f64,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Proposal> {
    if model.dim() != bx.dim() {
        return Err(Error::Usage(format!(
            "model dimension {} does not match box dimension {}",
            model.dim(),
            bx.dim()
        )));
    }
    let cands = generate_candidates(bx, incumbent, cfg, rng)?;
    let (means, stds) = model.posterior_batch(&cands)?;
    let (index, score) = argmin_lcb(&means, &stds, kappa)
        .ok_or_else(|| Error::Config("empty candidate set".into()))?;
    let d = bx.dim();
    Ok(Proposal {
        point: SubspacePoint::new(cands[index * d..(index + 1) * d].to_vec()),
        index,
        lcb: score,
        mean: means[index],
        std: stds[index],
    })
}
