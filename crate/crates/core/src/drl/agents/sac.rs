use ndarray::{s, Array2};
use rand_chacha::ChaCha8Rng;

use super::{
    check_state, check_transition, gaussian_head, new_rng, normal, sac_q_target, sac_value_target, Action,
    ActionSpace, Agent, Algorithm, Hyper, Losses, RewardScaler, Transition, LOG_STD_RANGE,
};
use crate::drl::mlp::{batch_matrix, Mlp};
use crate::drl::normalize::ObservationScaler;
use crate::drl::optim::Adam;
use crate::drl::replay::ReplayBuffer;
use crate::error::{Error, Result};

/// Keeps `ln(1 − tanh²)` finite at saturation.
const SQUASH_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Stored {
    state: Vec<f64>,
    action: Vec<f64>,
    reward: f64,
    next_state: Vec<f64>,
    terminal: bool,
}

/// Soft actor-critic with a state-value network, its moving-average target,
/// two soft Q networks (minimum taken) and a `tanh`-squashed Gaussian policy.
pub struct Sac {
    hyper: Hyper,
    policy: Mlp,
    value: Mlp,
    value_target: Mlp,
    q1: Mlp,
    q2: Mlp,
    policy_opt: Adam,
    value_opt: Adam,
    q1_opt: Adam,
    q2_opt: Adam,
    replay: ReplayBuffer<Stored>,
    scaler: ObservationScaler,
    rewards: RewardScaler,
    dim: usize,
    rng: ChaCha8Rng,
}

/// Reparameterized policy sample for a batch.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub action: Array2<f64>,
    pub log_prob: Vec<f64>,
    log_std_raw: Array2<f64>,
    noise: Array2<f64>,
}

fn join(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    let (n, ds) = states.dim();
    let mut x = Array2::zeros((n, ds + actions.ncols()));
    x.slice_mut(s![.., ..ds]).assign(states);
    x.slice_mut(s![.., ds..]).assign(actions);
    x
}

impl Sac {
    pub fn new(state_dim: usize, dim: usize, hyper: Hyper, seed: u64) -> Result<Self> {
        let mut rng = new_rng(seed);
        let policy = Mlp::standard(state_dim, 2 * dim, 0.01, &mut rng)?;
        let value = Mlp::standard(state_dim, 1, 1.0, &mut rng)?;
        let q1 = Mlp::standard(state_dim + dim, 1, 1.0, &mut rng)?;
        let q2 = Mlp::standard(state_dim + dim, 1, 1.0, &mut rng)?;
        let lr = hyper.learning_rate;
        Ok(Self {
            policy_opt: Adam::new(&policy, lr),
            value_opt: Adam::new(&value, lr),
            q1_opt: Adam::new(&q1, lr),
            q2_opt: Adam::new(&q2, lr),
            value_target: value.clone(),
            replay: ReplayBuffer::new(hyper.replay_capacity),
            rewards: RewardScaler::new(hyper.reward_scaling),
            scaler: ObservationScaler::new(state_dim),
            hyper,
            policy,
            value,
            q1,
            q2,
            dim,
            rng,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn policy_net(&self) -> &Mlp {
        &self.policy
    }

    pub fn policy_net_mut(&mut self) -> &mut Mlp {
        &mut self.policy
    }

    /// Samples `a = tanh(μ + σ·ξ)` for the given standard normal `noise`.
    pub fn sample_with(&self, states: &Array2<f64>, noise: &Array2<f64>) -> Result<PolicySample> {
        let out = self.policy.forward_batch(states)?;
        let d = self.dim;
        let mean_raw = out.slice(s![.., ..d]).to_owned();
        let log_std_raw = out.slice(s![.., d..]).to_owned();
        let n = states.nrows();
        let mut action = Array2::zeros((n, d));
        let mut log_prob = vec![0.0; n];
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        for b in 0..n {
            for j in 0..d {
                let ls = log_std_raw[(b, j)].clamp(LOG_STD_RANGE.0, LOG_STD_RANGE.1);
                let xi = noise[(b, j)];
                let a = (mean_raw[(b, j)] + ls.exp() * xi).tanh();
                action[(b, j)] = a;
                log_prob[b] += -0.5 * xi * xi - ls - half_ln_2pi - (1.0 - a * a + SQUASH_EPS).ln();
            }
        }
        Ok(PolicySample {
            action,
            log_prob,
            log_std_raw,
            noise: noise.clone(),
        })
    }

    /// Minimum of the two soft Q networks and its action gradient.
    fn min_q(&self, states: &Array2<f64>, actions: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
        let x = join(states, actions);
        let n = x.nrows();
        let t1 = self.q1.forward_trace(&x)?;
        let t2 = self.q2.forward_trace(&x)?;
        let ones = Array2::ones((n, 1));
        let (_, d1) = self.q1.backward(&t1, &ones)?;
        let (_, d2) = self.q2.backward(&t2, &ones)?;
        let ds = states.ncols();
        let mut q = vec![0.0; n];
        let mut grad = Array2::zeros(actions.dim());
        for b in 0..n {
            let (v, d) = if t1.output[(b, 0)] <= t2.output[(b, 0)] { (t1.output[(b, 0)], &d1) } else { (t2.output[(b, 0)], &d2) };
            q[b] = v;
            grad.row_mut(b).assign(&d.slice(s![b, ds..]));
        }
        Ok((q, grad))
    }

    /// Policy loss `mean(T·log π − min Q)` under fixed noise, and its gradient
    /// with respect to the policy network outputs.
    pub fn policy_loss(&self, states: &Array2<f64>, noise: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        let sample = self.sample_with(states, noise)?;
        let (q, dq) = self.min_q(states, &sample.action)?;
        let n = states.nrows();
        let d = self.dim;
        let temp = self.hyper.temperature;
        let mut upstream = Array2::zeros((n, 2 * d));
        let mut loss = 0.0;
        for b in 0..n {
            loss += (temp * sample.log_prob[b] - q[b]) / n as f64;
            for j in 0..d {
                let a = sample.action[(b, j)];
                let raw_ls = sample.log_std_raw[(b, j)];
                let sigma = raw_ls.clamp(LOG_STD_RANGE.0, LOG_STD_RANGE.1).exp();
                let xi = sample.noise[(b, j)];
                let slope = 1.0 - a * a;
                let corr = 2.0 * a * slope / (slope + SQUASH_EPS);
                let du = (temp * corr - dq[(b, j)] * slope) / n as f64;
                upstream[(b, j)] = du;
                if raw_ls > LOG_STD_RANGE.0 && raw_ls < LOG_STD_RANGE.1 {
                    upstream[(b, d + j)] = -temp / n as f64 + du * sigma * xi;
                }
            }
        }
        Ok((loss, upstream))
    }

    fn learn(&mut self, batch: &[Stored]) -> Result<(f64, f64, f64)> {
        let n = batch.len();
        let nf = n as f64;
        let rows = |f: &dyn Fn(&Stored) -> &[f64]| batch_matrix(&batch.iter().map(f).collect::<Vec<_>>());
        let s = rows(&|t| t.state.as_slice())?;
        let s2 = rows(&|t| t.next_state.as_slice())?;
        let a = rows(&|t| t.action.as_slice())?;
        let noise = Array2::from_shape_fn((n, self.dim), |_| normal(&mut self.rng));

        // value: target Q − T·log π under a fresh policy sample
        let sample = self.sample_with(&s, &noise)?;
        let (qmin, _) = self.min_q(&s, &sample.action)?;
        let vt = self.value.forward_trace(&s)?;
        let mut vu = Array2::zeros((n, 1));
        let mut value_loss = 0.0;
        for b in 0..n {
            let y = sac_value_target(qmin[b], sample.log_prob[b], self.hyper.temperature);
            let err = vt.output[(b, 0)] - y;
            value_loss += err * err / nf;
            vu[(b, 0)] = 2.0 * err / nf;
        }

        // soft Q: r + ζ·V̄(s′)
        let v_next = self.value_target.forward_batch(&s2)?;
        let x = join(&s, &a);
        let mut q_loss = 0.0;
        let mut q_grads = Vec::with_capacity(2);
        for net in [&self.q1, &self.q2] {
            let t = net.forward_trace(&x)?;
            let mut u = Array2::zeros((n, 1));
            for (b, st) in batch.iter().enumerate() {
                let y = sac_q_target(st.reward, self.hyper.discount, v_next[(b, 0)], st.terminal);
                let err = t.output[(b, 0)] - y;
                q_loss += err * err / nf / 2.0;
                u[(b, 0)] = 2.0 * err / nf;
            }
            q_grads.push(net.backward(&t, &u)?.0);
        }

        let (policy_loss, pu) = self.policy_loss(&s, &noise)?;
        let pt = self.policy.forward_trace(&s)?;
        let (pg, _) = self.policy.backward(&pt, &pu)?;
        let (vg, _) = self.value.backward(&vt, &vu)?;

        self.value_opt.step(&mut self.value, &vg);
        self.q1_opt.step(&mut self.q1, &q_grads[0]);
        self.q2_opt.step(&mut self.q2, &q_grads[1]);
        self.policy_opt.step(&mut self.policy, &pg);
        self.value_target.soft_update(&self.value, self.hyper.target_rate);
        Ok((value_loss, q_loss, policy_loss))
    }
}

impl Agent for Sac {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Sac
    }

    fn state_dim(&self) -> usize {
        self.scaler.dim()
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous(self.dim)
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<Action> {
        check_state(state, self.state_dim())?;
        let x = self.scaler.transform(state, explore);
        let (mean, log_std) = gaussian_head(&self.policy.forward(&x)?);
        let a = if explore {
            mean.iter().zip(&log_std).map(|(m, ls)| (m + ls.exp() * normal(&mut self.rng)).tanh()).collect()
        } else {
            mean.iter().map(|m| m.tanh()).collect()
        };
        Ok(Action::Continuous(a))
    }

    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>> {
        check_transition(t, self.state_dim())?;
        let action = t
            .action
            .values()
            .filter(|a| a.len() == self.dim)
            .ok_or_else(|| Error::InvalidArgument("SAC action does not match its space".into()))?
            .to_vec();
        let stored = Stored {
            state: self.scaler.transform(&t.state, false),
            action,
            reward: self.rewards.scale(t.reward) * self.hyper.reward_scale,
            next_state: self.scaler.transform(&t.next_state, false),
            terminal: t.terminal,
        };
        self.replay.push(stored);
        if self.replay.len() < self.hyper.batch_size {
            return Ok(None);
        }
        let batch: Vec<Stored> = self.replay.sample(self.hyper.batch_size, &mut self.rng).into_iter().cloned().collect();
        let (v, q, p) = self.learn(&batch)?;
        Ok(Some(vec![q, v, p]))
    }

    fn end_episode(&mut self) -> Result<Option<Losses>> {
        Ok(None)
    }

    fn value_estimate(&mut self, state: &[f64]) -> Option<f64> {
        let x = self.scaler.transform(state, false);
        self.value.forward(&x).ok().map(|v| v[0])
    }

    fn exploration(&self) -> f64 {
        self.hyper.temperature
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("policy", &self.policy),
            ("value", &self.value),
            ("value_target", &self.value_target),
            ("q1", &self.q1),
            ("q2", &self.q2),
        ]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)> {
        vec![
            ("policy", &mut self.policy),
            ("value", &mut self.value),
            ("value_target", &mut self.value_target),
            ("q1", &mut self.q1),
            ("q2", &mut self.q2),
        ]
    }

    fn scaler(&self) -> &ObservationScaler {
        &self.scaler
    }

    fn scaler_mut(&mut self) -> &mut ObservationScaler {
        &mut self.scaler
    }
}
