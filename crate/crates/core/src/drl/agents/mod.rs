//! The six agents behind one object-safe interface.

mod ac;
mod ddpg;
mod ddqn;
mod pg;
mod sac;
mod sarsa;

pub use ac::ActorCritic;
pub use ddpg::Ddpg;
pub use ddqn::Ddqn;
pub use pg::PolicyGradient;
pub use sac::Sac;
pub use sarsa::Sarsa;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::normalize::{ObservationScaler, RunningStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ddqn,
    Sarsa,
    Pg,
    Ac,
    Ddpg,
    Sac,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Ddqn,
        Algorithm::Sarsa,
        Algorithm::Pg,
        Algorithm::Ac,
        Algorithm::Ddpg,
        Algorithm::Sac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ddqn => "ddqn",
            Algorithm::Sarsa => "sarsa",
            Algorithm::Pg => "pg",
            Algorithm::Ac => "ac",
            Algorithm::Ddpg => "ddpg",
            Algorithm::Sac => "sac",
        }
    }

    pub fn supports_discrete(self) -> bool {
        matches!(self, Algorithm::Ddqn | Algorithm::Sarsa | Algorithm::Pg | Algorithm::Ac)
    }

    pub fn supports_continuous(self) -> bool {
        matches!(self, Algorithm::Pg | Algorithm::Ddpg | Algorithm::Sac)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

/// Agent hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    /// ζ
    pub discount: f64,
    /// α
    pub learning_rate: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Soft target-update rate.
    pub target_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Steps of the linear ε decay.
    pub epsilon_decay_steps: usize,
    /// SAC temperature.
    pub temperature: f64,
    /// DDPG Gaussian exploration noise.
    pub action_noise: f64,
    /// Divide rewards by their running RMS before learning.
    pub reward_scaling: bool,
    /// Standardize policy-gradient returns with running statistics.
    pub return_baseline: bool,
    /// SAC reward multiplier, applied after RMS scaling; sets the weight of
    /// the reward against the entropy term.
    pub reward_scale: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            discount: 0.01,
            learning_rate: 0.001,
            replay_capacity: 100_000,
            batch_size: 64,
            target_rate: 0.005,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
            temperature: 0.2,
            action_noise: 0.1,
            reward_scaling: true,
            return_baseline: true,
            reward_scale: 5.0,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig(format!("discount {} outside [0, 1)", self.discount)));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 {
            return Err(Error::InvalidConfig("batch size and replay capacity must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.target_rate) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(Error::InvalidConfig("target rate and epsilon must lie in [0, 1]".into()));
        }
        if !(self.temperature >= 0.0) || !(self.action_noise >= 0.0) {
            return Err(Error::InvalidConfig("temperature and action noise must be nonnegative".into()));
        }
        if !(self.reward_scale > 0.0) || !self.reward_scale.is_finite() {
            return Err(Error::InvalidConfig(format!("reward scale {} must be positive", self.reward_scale)));
        }
        Ok(())
    }

    /// Linear ε schedule.
    pub fn epsilon(&self, step: usize) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let f = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    /// Number of choices.
    Discrete(usize),
    /// Dimension; every component lies in [-1, 1].
    Continuous(usize),
}

impl ActionSpace {
    pub fn dim(self) -> usize {
        match self {
            ActionSpace::Discrete(n) | ActionSpace::Continuous(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn index(&self) -> Option<usize> {
        match self {
            Action::Discrete(j) => Some(*j),
            Action::Continuous(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Action::Continuous(v) => Some(v),
            Action::Discrete(_) => None,
        }
    }
}

/// One environment transition as seen by an agent (raw states).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Losses of one update, primary first.
pub type Losses = Vec<f64>;

pub trait Agent: Send {
    fn algorithm(&self) -> Algorithm;
    fn state_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    /// Exploratory when `explore`, otherwise greedy / mean action.
    fn act(&mut self, state: &[f64], explore: bool) -> Result<Action>;
    /// Learns from one transition (value-based and off-policy agents).
    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>>;
    /// Closes an episode (Monte-Carlo agents update here).
    fn end_episode(&mut self) -> Result<Option<Losses>>;
    /// Mean Q or value estimate at `state`, when the agent has one.
    fn value_estimate(&mut self, state: &[f64]) -> Option<f64>;
    /// Current ε or temperature.
    fn exploration(&self) -> f64;
    fn networks(&self) -> Vec<(&'static str, &Mlp)>;
    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)>;
    fn scaler(&self) -> &ObservationScaler;
    fn scaler_mut(&mut self) -> &mut ObservationScaler;
}

/// Builds an agent; the action space must suit the algorithm.
pub fn make_agent(
    algorithm: Algorithm,
    state_dim: usize,
    space: ActionSpace,
    hyper: &Hyper,
    seed: u64,
) -> Result<Box<dyn Agent>> {
    hyper.validate()?;
    if state_dim == 0 || space.dim() == 0 {
        return Err(Error::InvalidArgument("agent needs nonempty state and action spaces".into()));
    }
    let h = hyper.clone();
    Ok(match (algorithm, space) {
        (Algorithm::Ddqn, ActionSpace::Discrete(n)) => Box::new(Ddqn::new(state_dim, n, h, seed)?),
        (Algorithm::Sarsa, ActionSpace::Discrete(n)) => Box::new(Sarsa::new(state_dim, n, h, seed)?),
        (Algorithm::Pg, _) => Box::new(PolicyGradient::new(state_dim, space, h, seed)?),
        (Algorithm::Ac, ActionSpace::Discrete(n)) => Box::new(ActorCritic::new(state_dim, n, h, seed)?),
        (Algorithm::Ddpg, ActionSpace::Continuous(d)) => Box::new(Ddpg::new(state_dim, d, h, seed)?),
        (Algorithm::Sac, ActionSpace::Continuous(d)) => Box::new(Sac::new(state_dim, d, h, seed)?),
        (a, s) => {
            return Err(Error::InvalidArgument(format!("{a} does not support action space {s:?}")));
        }
    })
}

/// `Y = r + ζ·Q_target(s′, argmax_a Q_online(s′, a))`, or `r` when terminal.
pub fn ddqn_target(reward: f64, discount: f64, q_target_at_online_argmax: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + discount * q_target_at_online_argmax
    }
}

/// `Y = r + ζ·Q(s′, a′)`, or `r` when terminal.
pub fn sarsa_target(reward: f64, discount: f64, q_next: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + discount * q_next
    }
}

/// Soft value target `Q(s, ã) − T·log π(ã|s)`.
pub fn sac_value_target(q: f64, log_prob: f64, temperature: f64) -> f64 {
    q - temperature * log_prob
}

/// Soft Q target `r + ζ·V̄(s′)`, or `r` when terminal.
pub fn sac_q_target(reward: f64, discount: f64, v_next: f64, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + discount * v_next
    }
}

/// `G_t = Σ_{l ≥ t} ζ^{l−t}·r_l`
pub fn discounted_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + discount * acc;
        out[t] = acc;
    }
    out
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub(crate) fn sample_categorical(p: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Divides rewards by their running root mean square.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct RewardScaler {
    enabled: bool,
    squares: RunningStats,
}

impl RewardScaler {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            enabled,
            squares: RunningStats::default(),
        }
    }

    pub(crate) fn scale(&mut self, r: f64) -> f64 {
        if !self.enabled {
            return r;
        }
        self.squares.push(r * r);
        let rms = self.squares.mean().sqrt();
        if rms > 0.0 {
            r / rms
        } else {
            r
        }
    }
}

/// Clamp range of Gaussian log standard deviations.
pub const LOG_STD_RANGE: (f64, f64) = (-5.0, 2.0);

/// Splits a `[mean, log_std]` head; log-stds are clamped.
pub(crate) fn gaussian_head(out: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = out.len() / 2;
    let mean = out[..d].to_vec();
    let log_std = out[d..].iter().map(|v| v.clamp(LOG_STD_RANGE.0, LOG_STD_RANGE.1)).collect();
    (mean, log_std)
}

pub(crate) fn check_state(state: &[f64], dim: usize) -> Result<()> {
    if state.len() != dim {
        return Err(Error::dims("agent state", dim, state.len()));
    }
    Ok(())
}

pub(crate) fn check_transition(t: &Transition, dim: usize) -> Result<()> {
    check_state(&t.state, dim)?;
    check_state(&t.next_state, dim)?;
    if !t.reward.is_finite() {
        return Err(Error::NonFinite("transition reward"));
    }
    Ok(())
}

pub(crate) fn new_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
