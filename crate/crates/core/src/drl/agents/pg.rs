use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::{
    argmax, check_state, check_transition, discounted_returns, gaussian_head, new_rng, normal, sample_categorical,
    Action, ActionSpace, Agent, Algorithm, Hyper, Losses, Transition, LOG_STD_RANGE,
};
use crate::drl::mlp::{batch_matrix, softmax, Mlp};
use crate::drl::normalize::{ObservationScaler, RunningStats};
use crate::drl::optim::{Adam, Sgd};
use crate::error::{Error, Result};

/// Monte-Carlo policy gradient: after each episode
/// `θ ← θ + α·Σ_t G_t·∇ ln μ(a_t|s_t)`.
///
/// Discrete spaces use a softmax policy and plain gradient steps; continuous
/// spaces a Gaussian over pre-squash actions with `tanh` applied on output,
/// stepped by Adam since the mean and log-std gradients differ in scale.
pub struct PolicyGradient {
    hyper: Hyper,
    net: Mlp,
    opt: Optimizer,
    scaler: ObservationScaler,
    space: ActionSpace,
    returns: RunningStats,
    /// (scaled state, discrete action or pre-squash sample, reward)
    episode: Vec<(Vec<f64>, Vec<f64>, f64)>,
    /// Pre-squash sample behind the last continuous action.
    last_sample: Option<(Vec<f64>, Vec<f64>)>,
    rng: ChaCha8Rng,
}

enum Optimizer {
    Sgd(Sgd),
    Adam(Adam),
}

impl PolicyGradient {
    pub fn new(state_dim: usize, space: ActionSpace, hyper: Hyper, seed: u64) -> Result<Self> {
        let mut rng = new_rng(seed);
        let out = match space {
            ActionSpace::Discrete(n) => n,
            ActionSpace::Continuous(d) => 2 * d,
        };
        let net = Mlp::standard(state_dim, out, 0.01, &mut rng)?;
        Ok(Self {
            opt: match space {
                ActionSpace::Discrete(_) => Optimizer::Sgd(Sgd { lr: hyper.learning_rate }),
                ActionSpace::Continuous(_) => Optimizer::Adam(Adam::new(&net, hyper.learning_rate)),
            },
            scaler: ObservationScaler::new(state_dim),
            hyper,
            net,
            space,
            returns: RunningStats::default(),
            episode: Vec::new(),
            last_sample: None,
            rng,
        })
    }

    /// Action probabilities at a raw state (discrete spaces).
    pub fn probabilities(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        let x = self.scaler.transform(state, false);
        Ok(softmax(&self.net.forward(&x)?))
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    /// Weights `A_t` applied to each `∇ ln μ` term.
    fn weights(&mut self, returns: &[f64]) -> Vec<f64> {
        if !self.hyper.return_baseline {
            return returns.to_vec();
        }
        let (mean, std) = (self.returns.mean(), self.returns.std());
        let scale = if std > 1e-12 { std } else { 1.0 };
        let w = returns.iter().map(|g| (g - mean) / scale).collect();
        returns.iter().for_each(|&g| self.returns.push(g));
        w
    }

    /// Applies one episode given as (scaled state, action record, reward).
    fn learn(&mut self, episode: &[(Vec<f64>, Vec<f64>, f64)]) -> Result<f64> {
        let rewards: Vec<f64> = episode.iter().map(|e| e.2).collect();
        let returns = discounted_returns(&rewards, self.hyper.discount);
        let weights = self.weights(&returns);
        let states: Vec<&[f64]> = episode.iter().map(|e| e.0.as_slice()).collect();
        let trace = self.net.forward_trace(&batch_matrix(&states)?)?;
        let mut upstream = Array2::zeros(trace.output.dim());
        let mut objective = 0.0;
        for (t, (_, act, _)) in episode.iter().enumerate() {
            let out: Vec<f64> = trace.output.row(t).to_vec();
            let w = weights[t];
            match self.space {
                ActionSpace::Discrete(_) => {
                    let a = act[0] as usize;
                    let p = softmax(&out);
                    objective += w * p[a].max(1e-300).ln();
                    for (j, pj) in p.iter().enumerate() {
                        let ind = if j == a { 1.0 } else { 0.0 };
                        upstream[(t, j)] = -w * (ind - pj);
                    }
                }
                ActionSpace::Continuous(d) => {
                    let (mean, log_std) = gaussian_head(&out);
                    for j in 0..d {
                        let var = (2.0 * log_std[j]).exp();
                        let z = act[j] - mean[j];
                        objective += w * (-z * z / (2.0 * var) - log_std[j] - 0.5 * (2.0 * std::f64::consts::PI).ln());
                        upstream[(t, j)] = -w * z / var;
                        let raw = out[d + j];
                        if raw > LOG_STD_RANGE.0 && raw < LOG_STD_RANGE.1 {
                            upstream[(t, d + j)] = -w * (z * z / var - 1.0);
                        }
                    }
                }
            }
        }
        let (grads, _) = self.net.backward(&trace, &upstream)?;
        match &mut self.opt {
            Optimizer::Sgd(o) => o.step(&mut self.net, &grads),
            Optimizer::Adam(o) => o.step(&mut self.net, &grads),
        }
        Ok(-objective)
    }

    /// Runs the update on an explicit trajectory of raw states, actions and
    /// rewards (continuous actions are pre-squash samples).
    pub fn update_episode(&mut self, states: &[Vec<f64>], actions: &[Vec<f64>], rewards: &[f64]) -> Result<f64> {
        if states.len() != actions.len() || states.len() != rewards.len() {
            return Err(Error::dims("PolicyGradient::update_episode", states.len(), actions.len().min(rewards.len())));
        }
        let episode: Vec<_> = states
            .iter()
            .zip(actions)
            .zip(rewards)
            .map(|((s, a), &r)| (self.scaler.transform(s, false), a.clone(), r))
            .collect();
        self.learn(&episode)
    }
}

impl Agent for PolicyGradient {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Pg
    }

    fn state_dim(&self) -> usize {
        self.scaler.dim()
    }

    fn action_space(&self) -> ActionSpace {
        self.space
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<Action> {
        check_state(state, self.state_dim())?;
        let x = self.scaler.transform(state, explore);
        let out = self.net.forward(&x)?;
        match self.space {
            ActionSpace::Discrete(_) => {
                let p = softmax(&out);
                Ok(Action::Discrete(if explore { sample_categorical(&p, &mut self.rng) } else { argmax(&p) }))
            }
            ActionSpace::Continuous(_) => {
                let (mean, log_std) = gaussian_head(&out);
                if !explore {
                    return Ok(Action::Continuous(mean.iter().map(|m| m.tanh()).collect()));
                }
                let u: Vec<f64> = mean.iter().zip(&log_std).map(|(m, ls)| m + ls.exp() * normal(&mut self.rng)).collect();
                let a: Vec<f64> = u.iter().map(|v| v.tanh()).collect();
                self.last_sample = Some((a.clone(), u));
                Ok(Action::Continuous(a))
            }
        }
    }

    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>> {
        check_transition(t, self.state_dim())?;
        let record = match (&t.action, self.space) {
            (Action::Discrete(a), ActionSpace::Discrete(n)) if *a < n => vec![*a as f64],
            (Action::Continuous(a), ActionSpace::Continuous(d)) if a.len() == d => match self.last_sample.take() {
                Some((squashed, u)) if &squashed == a => u,
                // an action not drawn here: invert the squash
                _ => a.iter().map(|v| v.clamp(-1.0 + 1e-9, 1.0 - 1e-9).atanh()).collect(),
            },
            _ => return Err(Error::InvalidArgument("policy-gradient action does not match its space".into())),
        };
        let x = self.scaler.transform(&t.state, false);
        self.episode.push((x, record, t.reward));
        Ok(None)
    }

    fn end_episode(&mut self) -> Result<Option<Losses>> {
        if self.episode.is_empty() {
            return Ok(None);
        }
        let episode = std::mem::take(&mut self.episode);
        Ok(Some(vec![self.learn(&episode)?]))
    }

    fn value_estimate(&mut self, _state: &[f64]) -> Option<f64> {
        None
    }

    fn exploration(&self) -> f64 {
        0.0
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![("policy", &self.net)]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)> {
        vec![("policy", &mut self.net)]
    }

    fn scaler(&self) -> &ObservationScaler {
        &self.scaler
    }

    fn scaler_mut(&mut self) -> &mut ObservationScaler {
        &mut self.scaler
    }
}
