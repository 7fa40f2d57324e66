//! Dynamic shared-embedding Bayesian optimization.
//!
//! High-dimensional black-box minimization where only an unknown number of
//! directions matter. The optimizer searches a sequence of growing random
//! subspaces. Every subspace embeds through leading columns of one shared
//! Gaussian matrix, so observations made in a smaller subspace stay valid
//! (after zero-padding) in every larger one.
//!
//! Crate layout:
//!
//! * [`embedding`] shared embedding matrix, slicing, box projection, dataset carry-over
//! * [`surrogate`] zero-mean RBF Gaussian process with marginal-likelihood fitting
//! * [`acquisition`] lower-confidence-bound acquisition and candidate search
//! * [`dsebo`] the dimension-expanding controller and main optimization loop
//! * [`benchmarks`] synthetic test functions with a known effective dimension
//! * [`bandits`] multi-armed-bandit dimension-selection baselines
//! * [`harness`] seeded experiment runner, baselines, CSV traces and summaries

pub mod acquisition;
pub mod bandits;
pub mod benchmarks;
pub mod dsebo;
pub mod embedding;
mod error;
pub mod harness;
mod objective;
pub(crate) mod optimizer;
pub mod rng;
pub mod surrogate;
pub mod trace;

pub use acquisition::{kappa_schedule, lcb, propose, AcquisitionConfig, SubspaceBox};
pub use bandits::{run_mab, Arm, StrategyConfig, StrategyKind};
pub use benchmarks::{simple_regret, BaseFunction, BaseFunctionKind, HighDimFunction};
pub use dsebo::{
    convergence_threshold, next_dimension, run_dsebo, ControllerState, DseboConfig,
    ExpansionHistory,
};
pub use embedding::{
    embed, init_dataset, pad, AmbientBox, EmbeddingMap, SharedEmbedding, SubspaceDataset,
    SubspacePoint,
};
pub use error::{Error, Result};
pub use harness::{run_experiment, run_fixed_embedding, run_random_search, sweep, ExperimentConfig};
pub use objective::{FnObjective, Objective};
pub use surrogate::{fit_gp, rbf_kernel, GpModel, KernelParams};
pub use trace::{RunStatus, RunTrace, TraceRow};
