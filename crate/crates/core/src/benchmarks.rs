//! Synthetic test functions with a known effective dimension.
//!
//! Each base function is evaluated on `[-1, 1]^d_f` through an affine map
//! onto its usual domain. The high-dimensional wrapper appends `D - d_f`
//! nearly irrelevant coordinates:
//!
//! ```text
//! F_c(x) = f(clamp(x[..d_f] - c)) - (1/K) * sum_{i >= d_f} (x_i - c)^2
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::objective::Objective;

const BOX_TOLERANCE: f64 = 1e-12;
const MICHALEWICZ_STEEPNESS: i32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseFunctionKind {
    Sphere,
    Rosenbrock,
    Levy,
    Griewank,
    DixonPrice,
    Michalewicz,
}

impl BaseFunctionKind {
    pub const ALL: [BaseFunctionKind; 6] = [
        BaseFunctionKind::Sphere,
        BaseFunctionKind::Rosenbrock,
        BaseFunctionKind::Levy,
        BaseFunctionKind::Griewank,
        BaseFunctionKind::DixonPrice,
        BaseFunctionKind::Michalewicz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFunctionKind::Sphere => "sphere",
            BaseFunctionKind::Rosenbrock => "rosenbrock",
            BaseFunctionKind::Levy => "levy",
            BaseFunctionKind::Griewank => "griewank",
            BaseFunctionKind::DixonPrice => "dixon_price",
            BaseFunctionKind::Michalewicz => "michalewicz",
        }
    }

    /// Usual domain, identical on every coordinate.
    pub fn canonical_box(self) -> (f64, f64) {
        match self {
            BaseFunctionKind::Sphere => (-5.12, 5.12),
            BaseFunctionKind::Rosenbrock => (-2.048, 2.048),
            BaseFunctionKind::Levy => (-10.0, 10.0),
            BaseFunctionKind::Griewank => (-600.0, 600.0),
            BaseFunctionKind::DixonPrice => (-10.0, 10.0),
            BaseFunctionKind::Michalewicz => (0.0, PI),
        }
    }
}

impl fmt::Display for BaseFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown function {s:?}; expected one of {names:?}"))
            })
    }
}

/// A base function of dimension `d_f` on `[-1, 1]^d_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseFunction {
    pub kind: BaseFunctionKind,
    pub dim: usize,
}

impl BaseFunction {
    pub fn new(kind: BaseFunctionKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("base function dimension must be positive".into()));
        }
        Ok(Self { kind, dim })
    }

    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        Self::new(name.parse()?, dim)
    }

    fn scale_to_canonical(&self, u: f64) -> f64 {
        let (lo, hi) = self.kind.canonical_box();
        lo + (u + 1.0) * 0.5 * (hi - lo)
    }

    fn scale_from_canonical(&self, x: f64) -> f64 {
        let (lo, hi) = self.kind.canonical_box();
        2.0 * (x - lo) / (hi - lo) - 1.0
    }

    /// Evaluates at `u` in `[-1, 1]^d_f` (checked within 1e-12).
    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::Usage(format!(
                "{} expects {} coordinates, got {}",
                self.kind,
                self.dim,
                u.len()
            )));
        }
        if let Some(bad) = u.iter().find(|v| v.is_nan() || v.abs() > 1.0 + BOX_TOLERANCE) {
            return Err(Error::Usage(format!("coordinate {bad} outside [-1, 1]")));
        }
        Ok(self.eval_unchecked(u))
    }

    fn eval_unchecked(&self, u: &[f64]) -> f64 {
        let x: Vec<f64> = u.iter().map(|&v| self.scale_to_canonical(v)).collect();
        canonical_value(self.kind, &x)
    }

    /// Known global minimum value, where one exists in closed form.
    pub fn optimum_value(&self) -> Option<f64> {
        match self.kind {
            BaseFunctionKind::Michalewicz => None,
            _ => Some(0.0),
        }
    }

    /// A global minimizer in `[-1, 1]^d_f` coordinates, where one is known.
    pub fn optimizer(&self) -> Option<Vec<f64>> {
        let canonical: Vec<f64> = match self.kind {
            BaseFunctionKind::Sphere | BaseFunctionKind::Griewank => vec![0.0; self.dim],
            BaseFunctionKind::Rosenbrock | BaseFunctionKind::Levy => vec![1.0; self.dim],
            BaseFunctionKind::DixonPrice => (1..=self.dim)
                .map(|i| {
                    let e = (2f64.powi(i as i32) - 2.0) / 2f64.powi(i as i32);
                    2f64.powf(-e)
                })
                .collect(),
            BaseFunctionKind::Michalewicz => return None,
        };
        Some(canonical.into_iter().map(|x| self.scale_from_canonical(x)).collect())
    }
}

/// Standard closed forms on the canonical domain.
fn canonical_value(kind: BaseFunctionKind, x: &[f64]) -> f64 {
    match kind {
        BaseFunctionKind::Sphere => x.iter().map(|v| v * v).sum(),
        BaseFunctionKind::Rosenbrock => x
            .windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
            .sum(),
        BaseFunctionKind::Levy => {
            let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
            let n = w.len();
            let head = (PI * w[0]).sin().powi(2);
            let mid: f64 = w[..n - 1]
                .iter()
                .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
                .sum();
            let last = w[n - 1];
            let tail = (last - 1.0).powi(2) * (1.0 + (2.0 * PI * last).sin().powi(2));
            head + mid + tail
        }
        BaseFunctionKind::Griewank => {
            let sum: f64 = x.iter().map(|v| v * v / 4000.0).sum();
            let prod: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                .product();
            sum - prod + 1.0
        }
        BaseFunctionKind::DixonPrice => {
            let first = (x[0] - 1.0).powi(2);
            let rest: f64 = x
                .windows(2)
                .enumerate()
                .map(|(i, w)| (i + 2) as f64 * (2.0 * w[1] * w[1] - w[0]).powi(2))
                .sum();
            first + rest
        }
        BaseFunctionKind::Michalewicz => -x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.sin() * ((i + 1) as f64 * v * v / PI).sin().powi(2 * MICHALEWICZ_STEEPNESS)
            })
            .sum::<f64>(),
    }
}

/// `F_c` on `[-1, 1]^D` with effective dimension `base.dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighDimFunction {
    pub base: BaseFunction,
    pub ambient_dim: usize,
    /// Shift of the optimizer away from the origin.
    pub shift: f64,
    /// Penalty constant `K`; tail coordinates are weighted by `1/K`.
    pub penalty: f64,
}

impl HighDimFunction {
    pub fn new(base: BaseFunction, ambient_dim: usize, shift: f64, penalty: f64) -> Result<Self> {
        if ambient_dim <= base.dim {
            return Err(Error::Config(format!(
                "ambient dimension {ambient_dim} must exceed base dimension {}",
                base.dim
            )));
        }
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(Error::Config(format!("penalty constant must be positive, got {penalty}")));
        }
        if !shift.is_finite() {
            return Err(Error::Config(format!("shift must be finite, got {shift}")));
        }
        Ok(Self {
            base,
            ambient_dim,
            shift,
            penalty,
        })
    }

    /// Evaluates `F_c(x)` for `x` of length `D`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.ambient_dim {
            return Err(Error::Usage(format!(
                "expected {} coordinates, got {}",
                self.ambient_dim,
                x.len()
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let (head, tail) = x.split_at(self.base.dim);
        let shifted: Vec<f64> = head.iter().map(|v| (v - self.shift).clamp(-1.0, 1.0)).collect();
        let penalty: f64 = tail.iter().map(|v| (v - self.shift).powi(2)).sum();
        self.base.eval_unchecked(&shifted) - penalty / self.penalty
    }

    /// Largest possible change from moving the tail coordinates anywhere in
    /// `[-1, 1]`: `4 (D - d_f) / K` (for `|c| <= 1`).
    pub fn tail_bound(&self) -> f64 {
        4.0 * (self.ambient_dim - self.base.dim) as f64 / self.penalty
    }

    /// `x` with every tail coordinate set to the shift.
    pub fn head_only(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for v in &mut out[self.base.dim..] {
            *v = self.shift;
        }
        out
    }

    /// Global minimizer in ambient coordinates, where the base optimizer is
    /// known and its shifted copy lies inside the box.
    pub fn optimizer(&self) -> Option<Vec<f64>> {
        let u = self.base.optimizer()?;
        let mut x: Vec<f64> = u.iter().map(|v| v + self.shift).collect();
        if x.iter().any(|v| v.abs() > 1.0) {
            return None;
        }
        x.resize(self.ambient_dim, self.shift);
        Some(x)
    }

    pub fn optimum_value(&self) -> Option<f64> {
        self.base.optimum_value()
    }
}

impl Objective for HighDimFunction {
    fn dim(&self) -> usize {
        self.ambient_dim
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.eval_unchecked(x)
    }
}

/// Running best value minus `f_star`, evaluation by evaluation.
pub fn simple_regret(values: &[f64], f_star: f64) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.min(v);
            best - f_star
        })
        .collect()
}
