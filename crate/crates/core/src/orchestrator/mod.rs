//! Experiment driver: clustering, beamsteering and hierarchical training,
//! inference rollouts, exhaustive baselines and rate sweeps.

mod eval;
mod logs;
mod plan;
mod simulate;
mod train;

pub use eval::{evaluate_inference, exhaustive_baseline, ExhaustiveResult, InferenceSlot, InferenceSummary, Policy};
pub use logs::{episode_means, tail_mean, variance, BeamStep, ClusterStep};
pub use plan::{BeamPlan, ClusteringPlan, RunPlan};
pub use simulate::{balanced_config, rate_sweep, RateSample, SweepOptions};
pub use train::{
    clustering_env, train_beamsteering, train_clustering, train_hierarchical, BeamAgents, BeamTraining, RunOptions,
    Training,
};
