use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    argmax, check_state, check_transition, new_rng, sarsa_target, Action, ActionSpace, Agent, Algorithm, Hyper,
    Losses, RewardScaler, Transition,
};
use crate::drl::mlp::{batch_matrix, Mlp};
use crate::drl::normalize::ObservationScaler;
use crate::drl::optim::Adam;
use crate::error::{Error, Result};

/// On-policy SARSA with a Q-network updated after every transition.
///
/// The next action `a′` is drawn ε-greedily while learning and then returned
/// by the following call to `act`, so the behaviour and the target agree.
pub struct Sarsa {
    hyper: Hyper,
    net: Mlp,
    opt: Adam,
    scaler: ObservationScaler,
    rewards: RewardScaler,
    actions: usize,
    steps: usize,
    pending: Option<(Vec<f64>, usize)>,
    rng: ChaCha8Rng,
}

impl Sarsa {
    pub fn new(state_dim: usize, actions: usize, hyper: Hyper, seed: u64) -> Result<Self> {
        let mut rng = new_rng(seed);
        let net = Mlp::standard(state_dim, actions, 1.0, &mut rng)?;
        let opt = Adam::new(&net, hyper.learning_rate);
        Ok(Self {
            rewards: RewardScaler::new(hyper.reward_scaling),
            scaler: ObservationScaler::new(state_dim),
            hyper,
            net,
            opt,
            actions,
            steps: 0,
            pending: None,
            rng,
        })
    }

    fn epsilon_greedy(&mut self, x: &[f64]) -> Result<usize> {
        let eps = self.hyper.epsilon(self.steps);
        if self.rng.random::<f64>() < eps {
            Ok(self.rng.random_range(0..self.actions))
        } else {
            Ok(argmax(&self.net.forward(x)?))
        }
    }

    /// One update on `(s, a, r, s′, a′)` with scaled states; returns the
    /// squared TD error before the step.
    pub fn update(&mut self, s: &[f64], a: usize, r: f64, s2: &[f64], a2: usize, terminal: bool) -> Result<f64> {
        let q_next = self.net.forward(s2)?[a2];
        let y = sarsa_target(r, self.hyper.discount, q_next, terminal);
        let trace = self.net.forward_trace(&batch_matrix(&[s])?)?;
        let err = trace.output[(0, a)] - y;
        let mut upstream = Array2::zeros(trace.output.dim());
        upstream[(0, a)] = 2.0 * err;
        let (grads, _) = self.net.backward(&trace, &upstream)?;
        self.opt.step(&mut self.net, &grads);
        Ok(err * err)
    }

    pub fn q_values(&self, scaled_state: &[f64]) -> Result<Vec<f64>> {
        self.net.forward(scaled_state)
    }

    /// The `a′` chosen by the last update, returned by the next `act`.
    pub fn pending_action(&self) -> Option<usize> {
        self.pending.as_ref().map(|p| p.1)
    }
}

impl Agent for Sarsa {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Sarsa
    }

    fn state_dim(&self) -> usize {
        self.scaler.dim()
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(self.actions)
    }

    fn act(&mut self, state: &[f64], explore: bool) -> Result<Action> {
        check_state(state, self.state_dim())?;
        let x = self.scaler.transform(state, explore);
        if !explore {
            return Ok(Action::Discrete(argmax(&self.net.forward(&x)?)));
        }
        if let Some((s, a)) = self.pending.take() {
            if s == state {
                return Ok(Action::Discrete(a));
            }
        }
        self.steps += 1;
        Ok(Action::Discrete(self.epsilon_greedy(&x)?))
    }

    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>> {
        check_transition(t, self.state_dim())?;
        let a = t
            .action
            .index()
            .filter(|&a| a < self.actions)
            .ok_or_else(|| Error::InvalidArgument("SARSA action out of range".into()))?;
        let s = self.scaler.transform(&t.state, false);
        let s2 = self.scaler.transform(&t.next_state, false);
        let r = self.rewards.scale(t.reward);
        self.steps += 1;
        let a2 = self.epsilon_greedy(&s2)?;
        let loss = self.update(&s, a, r, &s2, a2, t.terminal)?;
        self.pending = if t.terminal { None } else { Some((t.next_state.clone(), a2)) };
        Ok(Some(vec![loss]))
    }

    fn end_episode(&mut self) -> Result<Option<Losses>> {
        self.pending = None;
        Ok(None)
    }

    fn value_estimate(&mut self, state: &[f64]) -> Option<f64> {
        let x = self.scaler.transform(state, false);
        let q = self.net.forward(&x).ok()?;
        Some(q.iter().sum::<f64>() / q.len() as f64)
    }

    fn exploration(&self) -> f64 {
        self.hyper.epsilon(self.steps)
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![("q", &self.net)]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)> {
        vec![("q", &mut self.net)]
    }

    fn scaler(&self) -> &ObservationScaler {
        &self.scaler
    }

    fn scaler_mut(&mut self) -> &mut ObservationScaler {
        &mut self.scaler
    }
}
