//! Zero-mean Gaussian-process regression with an isotropic RBF kernel.
//!
//! Targets are standardized before fitting and de-standardized at query
//! time. The lengthscale and signal variance are chosen by maximizing the
//! log marginal likelihood with a compass search in log space; the noise
//! variance stays fixed.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use rand::Rng;

use crate::embedding::{SubspaceDataset, SubspacePoint};
use crate::error::{Error, Result};

/// Observation noise variance used for the noiseless benchmarks.
pub const NOISE_VARIANCE: f64 = 1e-6;
/// Smallest admissible noise variance.
pub const NOISE_FLOOR: f64 = 1e-10;
/// Diagonal jitter tried, in order, when a Cholesky factorization fails.
pub const JITTER_LADDER: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

const LENGTHSCALE_MIN: f64 = 1e-2;
const LENGTHSCALE_MAX_PER_SQRT_DIM: f64 = 1e2;
const SIGNAL_MIN: f64 = 1e-2;
const SIGNAL_MAX: f64 = 1e2;

const WARM_STEP: f64 = 0.25;
const WARM_MAX_EVALS: usize = 12;
const COLD_STEP: f64 = 1.0;
const COLD_MAX_EVALS: usize = 30;
const MIN_STEP: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(lengthscale) && ok(signal_variance) && ok(noise_variance))
            || noise_variance < NOISE_FLOOR
        {
            return Err(Error::Config(format!(
                "invalid kernel parameters: lengthscale={lengthscale}, \
                 signal_variance={signal_variance}, noise_variance={noise_variance}"
            )));
        }
        Ok(Self {
            lengthscale,
            signal_variance,
            noise_variance,
        })
    }

    /// `lengthscale = sqrt(d)`, unit signal variance, fixed noise.
    pub fn default_for(dim: usize) -> Self {
        Self {
            lengthscale: (dim.max(1) as f64).sqrt(),
            signal_variance: 1.0,
            noise_variance: NOISE_VARIANCE,
        }
    }

    #[inline]
    fn eval_sq(&self, sq_dist: f64) -> f64 {
        let a = sq_dist / (2.0 * self.lengthscale * self.lengthscale);
        // exp underflows through the slow subnormal path well before this.
        if a > 700.0 {
            0.0
        } else {
            self.signal_variance * (-a).exp()
        }
    }

    fn to_log(self) -> [f64; 2] {
        [self.lengthscale.ln(), self.signal_variance.ln()]
    }

    fn from_log(theta: [f64; 2], noise_variance: f64) -> Self {
        Self {
            lengthscale: theta[0].exp(),
            signal_variance: theta[1].exp(),
            noise_variance,
        }
    }
}

/// `sigma_f^2 * exp(-|x - x'|^2 / (2 l^2))`.
pub fn rbf_kernel(x: &[f64], y: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Usage(format!(
            "kernel inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(params.eval_sq(sq_dist(x, y)))
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Target standardization; a (numerically) constant target keeps unit scale.
fn standardize(values: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut std = var.sqrt();
    if std.is_nan() || std <= 1e-12 * mean.abs().max(1.0) {
        std = 1.0;
    }
    let y = values.iter().map(|v| (v - mean) / std).collect();
    (y, mean, std)
}

/// Training data in the form the likelihood needs.
struct Prepared {
    inputs: Mat<f64>,
    sq_dists: Mat<f64>,
    targets: Vec<f64>,
    mean: f64,
    std: f64,
}

impl Prepared {
    fn new(data: &SubspaceDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Usage("cannot fit a GP to an empty dataset".into()));
        }
        if let Some(bad) = data.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite training target {bad}")));
        }
        let n = data.len();
        let d = data.dim();
        let pts = data.points();
        let inputs = Mat::from_fn(n, d, |i, j| pts[i].as_slice()[j]);
        let mut sq_dists = Mat::<f64>::zeros(n, n);
        for j in 0..n {
            for i in j + 1..n {
                let r2 = sq_dist(pts[i].as_slice(), pts[j].as_slice());
                sq_dists[(i, j)] = r2;
                sq_dists[(j, i)] = r2;
            }
        }
        let (targets, mean, std) = standardize(data.values());
        Ok(Self {
            inputs,
            sq_dists,
            targets,
            mean,
            std,
        })
    }
}

/// Cholesky factor of `K + (sigma_n^2 + jitter) I` and the solved weights.
struct Factor {
    chol: Mat<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

/// faer's SIMD kernels can return with the upper vector-register halves
/// dirty, after which every SSE instruction (libm's `exp` included) pays a
/// transition penalty of roughly 40x. Called after each faer routine.
#[inline]
fn clear_upper_simd_state() {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx") {
        // SAFETY: AVX support was checked at runtime.
        unsafe { std::arch::x86_64::_mm256_zeroupper() }
    }
}

fn factorize(prep: &Prepared, params: &KernelParams) -> Option<Factor> {
    let n = prep.targets.len();
    let base = Mat::from_fn(n, n, |i, j| {
        if i == j {
            params.signal_variance + params.noise_variance
        } else {
            params.eval_sq(prep.sq_dists[(i, j)])
        }
    });
    let attempt = |jitter: f64| -> Option<Mat<f64>> {
        if jitter == 0.0 {
            let l = base.llt(Side::Lower).ok().map(|l| l.L().to_owned());
            clear_upper_simd_state();
            return l;
        }
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        let l = k.llt(Side::Lower).ok().map(|l| l.L().to_owned());
        clear_upper_simd_state();
        l
    };
    let (chol, jitter) = std::iter::once(0.0)
        .chain(JITTER_LADDER)
        .find_map(|j| attempt(j).map(|c| (c, j)))?;

    let mut rhs = Mat::from_fn(n, 1, |i, _| prep.targets[i]);
    chol.as_ref().solve_lower_triangular_in_place(rhs.as_mut());
    let fit_term: f64 = rhs.col_as_slice(0).iter().map(|v| v * v).sum();
    chol.as_ref()
        .transpose()
        .solve_upper_triangular_in_place(rhs.as_mut());
    clear_upper_simd_state();
    let alpha = rhs.col_as_slice(0).to_vec();
    let log_det: f64 = (0..n).map(|i| chol[(i, i)].ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * fit_term - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if !lml.is_finite() {
        return None;
    }
    Some(Factor {
        chol,
        alpha,
        jitter,
        lml,
    })
}

/// Log marginal likelihood of the standardized targets of `data` under
/// `params`, or `None` if no jitter level makes the kernel matrix factorable.
pub fn log_marginal_likelihood(data: &SubspaceDataset, params: &KernelParams) -> Result<Option<f64>> {
    let prep = Prepared::new(data)?;
    Ok(factorize(&prep, params).map(|f| f.lml))
}

/// A fitted GP posterior. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    inputs: Mat<f64>,
    input_norms: Vec<f64>,
    targets: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    chol: Mat<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

impl GpModel {
    /// Conditions on `data` with fixed hyperparameters.
    pub fn condition(data: &SubspaceDataset, params: KernelParams) -> Result<Self> {
        let prep = Prepared::new(data)?;
        let factor = factorize(&prep, &params).ok_or_else(|| {
            Error::Numerical("Cholesky factorization failed at every jitter level".into())
        })?;
        Ok(Self::assemble(prep, params, factor))
    }

    fn assemble(prep: Prepared, params: KernelParams, factor: Factor) -> Self {
        let n = prep.inputs.nrows();
        let input_norms = (0..n)
            .map(|i| (0..prep.inputs.ncols()).map(|j| prep.inputs[(i, j)].powi(2)).sum())
            .collect();
        Self {
            params,
            inputs: prep.inputs,
            input_norms,
            targets: prep.targets,
            target_mean: prep.mean,
            target_std: prep.std,
            chol: factor.chol,
            alpha: factor.alpha,
            jitter: factor.jitter,
            lml: factor.lml,
        }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Standardized training targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_std(&self) -> f64 {
        self.target_std
    }

    /// Lower Cholesky factor of `K + (sigma_n^2 + jitter) I`.
    pub fn chol(&self) -> MatRef<'_, f64> {
        self.chol.as_ref()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Diagonal jitter that had to be added on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Log marginal likelihood at the fitted parameters.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Usage(format!(
                "query has dimension {len}, model was trained in dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Posterior mean and latent variance in standardized target units.
    pub fn posterior_standardized(&self, z: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(z.len())?;
        let n = self.len();
        let mut k = Mat::from_fn(n, 1, |i, _| {
            let row = (0..self.dim()).map(|j| (self.inputs[(i, j)] - z[j]).powi(2)).sum();
            self.params.eval_sq(row)
        });
        let mean: f64 = k.col_as_slice(0).iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        self.chol.as_ref().solve_lower_triangular_in_place(k.as_mut());
        clear_upper_simd_state();
        let explained: f64 = k.col_as_slice(0).iter().map(|v| v * v).sum();
        Ok((mean, (self.params.signal_variance - explained).max(0.0)))
    }

    /// De-standardized posterior mean and standard deviation at `z`.
    pub fn posterior(&self, z: &[f64]) -> Result<(f64, f64)> {
        let (m, v) = self.posterior_standardized(z)?;
        Ok((
            self.target_mean + self.target_std * m,
            self.target_std * v.sqrt(),
        ))
    }

    /// De-standardized posterior means and standard deviations for a batch
    /// of row-major queries (`queries.len()` a multiple of the dimension).
    pub fn posterior_batch(&self, queries: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        if d == 0 || queries.len() % d != 0 {
            return Err(Error::Usage(format!(
                "batch of {} values is not a whole number of {d}-dimensional queries",
                queries.len()
            )));
        }
        let m = queries.len() / d;
        let n = self.len();
        let q = MatRef::from_row_major_slice(queries, m, d);
        let q_norms: Vec<f64> = queries.chunks_exact(d).map(|r| r.iter().map(|v| v * v).sum()).collect();

        // cross[i, j] = x_i . q_j, turned into k(x_i, q_j) in place.
        let mut cross = Mat::<f64>::zeros(n, m);
        matmul(
            cross.as_mut(),
            Accum::Replace,
            self.inputs.as_ref(),
            q.transpose(),
            1.0,
            Par::Seq,
        );
        clear_upper_simd_state();
        let mut means = vec![0.0; m];
        for (j, mean) in means.iter_mut().enumerate() {
            let col = cross.col_as_slice_mut(j);
            let mut acc = 0.0;
            for (i, c) in col.iter_mut().enumerate() {
                let r2 = (self.input_norms[i] + q_norms[j] - 2.0 * *c).max(0.0);
                *c = self.params.eval_sq(r2);
                acc += *c * self.alpha[i];
            }
            *mean = self.target_mean + self.target_std * acc;
        }
        self.chol.as_ref().solve_lower_triangular_in_place(cross.as_mut());
        clear_upper_simd_state();
        let stds = (0..m)
            .map(|j| {
                let explained: f64 = cross.col_as_slice(j).iter().map(|v| v * v).sum();
                self.target_std * (self.params.signal_variance - explained).max(0.0).sqrt()
            })
            .collect();
        Ok((means, stds))
    }

    /// Posterior at a [`SubspacePoint`].
    pub fn predict(&self, z: &SubspacePoint) -> Result<(f64, f64)> {
        self.posterior(z.as_slice())
    }
}

struct Bounds {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Bounds {
    fn for_dim(dim: usize) -> Self {
        let sqrt_d = (dim.max(1) as f64).sqrt();
        Self {
            lo: [LENGTHSCALE_MIN.ln(), SIGNAL_MIN.ln()],
            hi: [(LENGTHSCALE_MAX_PER_SQRT_DIM * sqrt_d).ln(), SIGNAL_MAX.ln()],
        }
    }

    fn clamp(&self, t: [f64; 2]) -> [f64; 2] {
        [t[0].clamp(self.lo[0], self.hi[0]), t[1].clamp(self.lo[1], self.hi[1])]
    }
}

/// Compass search maximizing `objective` from `start`.
fn compass_search(
    objective: &mut impl FnMut([f64; 2]) -> f64,
    start: [f64; 2],
    start_value: f64,
    mut step: f64,
    max_evals: usize,
    bounds: &Bounds,
) -> ([f64; 2], f64) {
    let (mut best, mut best_val) = (start, start_value);
    let mut evals = 0;
    const DIRS: [[f64; 2]; 4] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    while step >= MIN_STEP && evals < max_evals {
        let mut moved = false;
        for dir in DIRS {
            if evals >= max_evals {
                break;
            }
            let cand = bounds.clamp([best[0] + step * dir[0], best[1] + step * dir[1]]);
            if cand == best {
                continue;
            }
            evals += 1;
            let v = objective(cand);
            if v > best_val {
                best = cand;
                best_val = v;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best, best_val)
}

/// Fits hyperparameters to `data` and returns the conditioned model.
///
/// The default parameters ([`KernelParams::default_for`]) are always scored,
/// so the returned likelihood is never below theirs. With `restarts == 0` a
/// single short search runs from `warm` (or the defaults); otherwise a wide
/// search runs from the defaults, from `warm`, and from `restarts` points
/// drawn uniformly in the log-parameter box using `rng`.
pub fn fit_gp<R: Rng + ?Sized>(
    data: &SubspaceDataset,
    warm: Option<&KernelParams>,
    restarts: usize,
    rng: &mut R,
) -> Result<GpModel> {
    let prep = Prepared::new(data)?;
    let bounds = Bounds::for_dim(data.dim());
    let defaults = KernelParams::default_for(data.dim());
    let noise = warm.map_or(NOISE_VARIANCE, |w| w.noise_variance.max(NOISE_FLOOR));
    let defaults = KernelParams {
        noise_variance: noise,
        ..defaults
    };

    let mut objective = |theta: [f64; 2]| -> f64 {
        factorize(&prep, &KernelParams::from_log(theta, noise)).map_or(f64::NEG_INFINITY, |f| f.lml)
    };

    let default_theta = defaults.to_log();
    let default_val = objective(default_theta);
    let mut best = (default_theta, default_val);
    let consider = |cand: ([f64; 2], f64), best: &mut ([f64; 2], f64)| {
        if cand.1 > best.1 {
            *best = cand;
        }
    };

    let warm_theta = warm.map(|w| bounds.clamp(w.to_log()));
    if restarts == 0 {
        let start = warm_theta.unwrap_or(default_theta);
        let start_val = if start == default_theta {
            default_val
        } else {
            objective(start)
        };
        let step = if warm.is_some() { WARM_STEP } else { COLD_STEP };
        let max_evals = if warm.is_some() { WARM_MAX_EVALS } else { COLD_MAX_EVALS };
        let found = compass_search(&mut objective, start, start_val, step, max_evals, &bounds);
        consider(found, &mut best);
    } else {
        let mut starts = vec![default_theta];
        starts.extend(warm_theta);
        for _ in 0..restarts {
            starts.push([
                rng.gen_range(bounds.lo[0]..=bounds.hi[0]),
                rng.gen_range(bounds.lo[1]..=bounds.hi[1]),
            ]);
        }
        for start in starts {
            let start_val = if start == default_theta {
                default_val
            } else {
                objective(start)
            };
            let found =
                compass_search(&mut objective, start, start_val, COLD_STEP, COLD_MAX_EVALS, &bounds);
            consider(found, &mut best);
        }
    }

    if !best.1.is_finite() {
        return Err(Error::Numerical(
            "Cholesky factorization failed at every jitter level for every candidate".into(),
        ));
    }
    let params = KernelParams::from_log(best.0, noise);
    let factor = factorize(&prep, &params)
        .ok_or_else(|| Error::Numerical("Cholesky factorization failed after fitting".into()))?;
    Ok(GpModel::assemble(prep, params, factor))
}
