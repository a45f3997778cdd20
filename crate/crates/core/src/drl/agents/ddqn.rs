use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    argmax, check_state, check_transition, ddqn_target, new_rng, Action, ActionSpace, Agent, Algorithm, Hyper,
    Losses, RewardScaler, Transition,
};
use crate::drl::mlp::{batch_matrix, Mlp};
use crate::drl::normalize::ObservationScaler;
use crate::drl::optim::Adam;
use crate::drl::replay::ReplayBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Stored {
    state: Vec<f64>,
    action: usize,
    reward: f64,
    next_state: Vec<f64>,
    terminal: bool,
}

/// Double deep Q-network with replay and a soft-updated target network.
pub struct Ddqn {
    hyper: Hyper,
    online: Mlp,
    target: Mlp,
    opt: Adam,
    replay: ReplayBuffer<Stored>,
    scaler: ObservationScaler,
    rewards: RewardScaler,
    actions: usize,
    steps: usize,
    rng: ChaCha8Rng,
}

impl Ddqn {
    pub fn new(state_dim: usize, actions: usize, hyper: Hyper, seed: u64) -> Result<Self> {
        let mut rng = new_rng(seed);
        let online = Mlp::standard(state_dim, actions, 1.0, &mut rng)?;
        let target = online.clone();
        let opt = Adam::new(&online, hyper.learning_rate);
        Ok(Self {
            replay: ReplayBuffer::new(hyper.replay_capacity),
            rewards: RewardScaler::new(hyper.reward_scaling),
            scaler: ObservationScaler::new(state_dim),
            hyper,
            online,
            target,
            opt,
            actions,
            steps: 0,
            rng,
        })
    }

    /// One gradient step on the given transitions (states already scaled);
    /// returns the mean squared TD error before the step.
    fn learn(&mut self, batch: &[Stored]) -> Result<f64> {
        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let nexts: Vec<&[f64]> = batch.iter().map(|t| t.next_state.as_slice()).collect();
        let s = batch_matrix(&states)?;
        let s2 = batch_matrix(&nexts)?;
        let q_next_online = self.online.forward_batch(&s2)?;
        let q_next_target = self.target.forward_batch(&s2)?;
        let trace = self.online.forward_trace(&s)?;
        let n = batch.len() as f64;
        let mut upstream = Array2::zeros(trace.output.dim());
        let mut loss = 0.0;
        for (b, t) in batch.iter().enumerate() {
            let row: Vec<f64> = q_next_online.row(b).to_vec();
            let j = argmax(&row);
            let y = ddqn_target(t.reward, self.hyper.discount, q_next_target[(b, j)], t.terminal);
            let err = trace.output[(b, t.action)] - y;
            loss += err * err / n;
            upstream[(b, t.action)] = 2.0 * err / n;
        }
        let (grads, _) = self.online.backward(&trace, &upstream)?;
        self.opt.step(&mut self.online, &grads);
        self.target.soft_update(&self.online, self.hyper.target_rate);
        Ok(loss)
    }

    /// Learns from an explicit batch of transitions, bypassing the replay
    /// buffer and reward scaling. States are used as given.
    pub fn update_on(&mut self, batch: &[Transition]) -> Result<f64> {
        let stored = batch
            .iter()
            .map(|t| {
                let action = t.action.index().ok_or_else(|| Error::InvalidArgument("DDQN needs discrete actions".into()))?;
                Ok(Stored {
                    state: t.state.clone(),
                    action,
                    reward: t.reward,
                    next_state: t.next_state.clone(),
                    terminal: t.terminal,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.learn(&stored)
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }
}

impl Agent for Ddqn {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ddqn
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
        if explore {
            let eps = self.hyper.epsilon(self.steps);
            self.steps += 1;
            if self.rng.random::<f64>() < eps {
                return Ok(Action::Discrete(self.rng.random_range(0..self.actions)));
            }
        }
        Ok(Action::Discrete(argmax(&self.online.forward(&x)?)))
    }

    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>> {
        check_transition(t, self.state_dim())?;
        let action = t
            .action
            .index()
            .filter(|&a| a < self.actions)
            .ok_or_else(|| Error::InvalidArgument("DDQN action out of range".into()))?;
        let stored = Stored {
            state: self.scaler.transform(&t.state, false),
            action,
            reward: self.rewards.scale(t.reward),
            next_state: self.scaler.transform(&t.next_state, false),
            terminal: t.terminal,
        };
        self.replay.push(stored);
        if self.replay.len() < self.hyper.batch_size {
            return Ok(None);
        }
        let batch: Vec<Stored> = self.replay.sample(self.hyper.batch_size, &mut self.rng).into_iter().cloned().collect();
        Ok(Some(vec![self.learn(&batch)?]))
    }

    fn end_episode(&mut self) -> Result<Option<Losses>> {
        Ok(None)
    }

    fn value_estimate(&mut self, state: &[f64]) -> Option<f64> {
        let x = self.scaler.transform(state, false);
        let q = self.online.forward(&x).ok()?;
        Some(q.iter().sum::<f64>() / q.len() as f64)
    }

    fn exploration(&self) -> f64 {
        self.hyper.epsilon(self.steps)
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![("online", &self.online), ("target", &self.target)]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)> {
        vec![("online", &mut self.online), ("target", &mut self.target)]
    }

    fn scaler(&self) -> &ObservationScaler {
        &self.scaler
    }

    fn scaler_mut(&mut self) -> &mut ObservationScaler {
        &mut self.scaler
    }
}
