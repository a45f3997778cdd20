use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plan::RunPlan;
use super::train::{clustering_env, greedy_steering, BeamAgents, RunOptions, RANDOM_POLICY_STREAM};
use crate::beamforming::BeamMode;
use crate::drl::{Agent, InnerBeams};
use crate::error::{Error, Result};
use crate::par::derive_seed;
use crate::report::{fmt_float, fmt_floats, CsvRecord};

/// How the clustering configuration is chosen during a rollout.
pub enum Policy<'a> {
    /// Greedy action of a trained agent.
    Agent(&'a mut dyn Agent),
    /// Uniform over all configurations.
    Random,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceSlot {
    pub slot: usize,
    pub action: usize,
    pub reward: f64,
    pub log_reward: f64,
    pub sum_rate: f64,
    pub rates: Vec<f64>,
    pub oracle_action: usize,
    pub oracle_reward: f64,
}

impl CsvRecord for InferenceSlot {
    fn header() -> Vec<&'static str> {
        vec![
            "slot",
            "action",
            "reward",
            "log_reward",
            "sum_rate",
            "ue_rates",
            "oracle_action",
            "oracle_reward",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.slot.to_string(),
            self.action.to_string(),
            fmt_float(self.reward),
            fmt_float(self.log_reward),
            fmt_float(self.sum_rate),
            fmt_floats(&self.rates),
            self.oracle_action.to_string(),
            fmt_float(self.oracle_reward),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceSummary {
    pub slots: Vec<InferenceSlot>,
    pub mean_reward: f64,
    pub mean_sum_rate: f64,
    /// Mean per-UE rate in bps/Hz.
    pub mean_ue_rate: f64,
    /// Mean of the best configuration's reward at every slot.
    pub oracle_mean_reward: f64,
}

impl InferenceSummary {
    pub fn oracle_ratio(&self) -> f64 {
        if self.oracle_mean_reward > 0.0 {
            self.mean_reward / self.oracle_mean_reward
        } else {
            0.0
        }
    }
}

/// Rolls the policy out for `slots` steps without learning, from the plan's
/// own channel sequence. Under per-step resampling every slot sees fresh
/// channels. When the plan's beam stage is `drl`, the given beam agents
/// steer (all-ones where no agent matches). The oracle evaluates every
/// configuration on the same channels with the non-learned beam stage.
pub fn evaluate_inference(
    plan: &RunPlan,
    policy: Policy<'_>,
    beam_agents: &mut BeamAgents,
    slots: usize,
    opts: RunOptions,
) -> Result<InferenceSummary> {
    plan.validate()?;
    if slots == 0 {
        return Err(Error::InvalidArgument("inference needs at least one slot".into()));
    }
    let beams = plan.clustering.beams;
    let mut env = clustering_env(plan, beams, opts.exec)?;
    let count = env.action_count();
    let mut policy = policy;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, RANDOM_POLICY_STREAM));
    let default_mode = match beams {
        InnerBeams::Optimized => BeamMode::Optimized(Default::default()),
        _ => BeamMode::Conventional,
    };
    let mut s = env.reset();
    let mut records = Vec::with_capacity(slots);
    for slot in 0..slots {
        let ctx = |e: Error| e.context(format!("inference slot {slot}"));
        env.advance().map_err(ctx)?;
        let (oracle_action, all) = env.exhaustive().map_err(ctx)?;
        let j = match &mut policy {
            Policy::Agent(agent) => agent
                .act(&s, false)?
                .index()
                .ok_or_else(|| Error::InvalidArgument("clustering agent returned a continuous action".into()))?,
            Policy::Random => rng.random_range(0..count),
            Policy::Fixed(j) => *j,
        };
        if j >= count {
            return Err(Error::IndexOutOfRange { index: j, size: count });
        }
        let mode = if beams == InnerBeams::Drl {
            let cfg = env.space().config_from_index(j)?.clone();
            BeamMode::Given(greedy_steering(plan, &env, &cfg, beam_agents).map_err(ctx)?)
        } else {
            default_mode.clone()
        };
        let out = env.evaluate(j, &mode).map_err(ctx)?;
        records.push(InferenceSlot {
            slot,
            action: j,
            reward: out.reward,
            log_reward: out.log_reward,
            sum_rate: out.sum_rate,
            rates: out.rates,
            oracle_action,
            oracle_reward: all[oracle_action].reward,
        });
        s = out.state;
    }
    let n = slots as f64;
    let ues = plan.network.ues as f64;
    let mean_reward = records.iter().map(|r| r.reward).sum::<f64>() / n;
    let mean_sum_rate = records.iter().map(|r| r.sum_rate).sum::<f64>() / n;
    let oracle_mean_reward = records.iter().map(|r| r.oracle_reward).sum::<f64>() / n;
    Ok(InferenceSummary {
        slots: records,
        mean_reward,
        mean_sum_rate,
        mean_ue_rate: mean_sum_rate / ues,
        oracle_mean_reward,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    /// Best configuration (lowest index on ties).
    pub best: usize,
    pub best_reward: f64,
    pub rewards: Vec<f64>,
    pub sum_rates: Vec<f64>,
}

/// Evaluates every configuration on the plan's first channel draw with the
/// non-learned beam stage of the plan.
pub fn exhaustive_baseline(plan: &RunPlan, opts: RunOptions) -> Result<ExhaustiveResult> {
    plan.validate()?;
    let beams = match plan.clustering.beams {
        InnerBeams::Drl => InnerBeams::Conventional,
        b => b,
    };
    let mut env = clustering_env(plan, beams, opts.exec)?;
    let (best, all) = env.exhaustive()?;
    Ok(ExhaustiveResult {
        best,
        best_reward: all[best].reward,
        rewards: all.iter().map(|o| o.reward).collect(),
        sum_rates: all.iter().map(|o| o.sum_rate).collect(),
    })
}
