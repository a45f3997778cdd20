use ndarray::{s, Array2};
use rand_chacha::ChaCha8Rng;

use super::{
    check_state, check_transition, new_rng, normal, Action, ActionSpace, Agent, Algorithm, Hyper, Losses,
    RewardScaler, Transition,
};
use crate::drl::mlp::{batch_matrix, Mlp};
use crate::drl::normalize::ObservationScaler;
use crate::drl::optim::Adam;
use crate::drl::replay::ReplayBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Stored {
    state: Vec<f64>,
    action: Vec<f64>,
    reward: f64,
    next_state: Vec<f64>,
    terminal: bool,
}

/// Deterministic policy gradient with a `tanh` actor, a Q critic on
/// `[state, action]` and soft-updated targets for both.
pub struct Ddpg {
    hyper: Hyper,
    actor: Mlp,
    critic: Mlp,
    actor_target: Mlp,
    critic_target: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    replay: ReplayBuffer<Stored>,
    scaler: ObservationScaler,
    rewards: RewardScaler,
    dim: usize,
    rng: ChaCha8Rng,
}

fn concat(s: &[f64], a: &[f64]) -> Vec<f64> {
    s.iter().chain(a).copied().collect()
}

impl Ddpg {
    pub fn new(state_dim: usize, dim: usize, hyper: Hyper, seed: u64) -> Result<Self> {
        let mut rng = new_rng(seed);
        let actor = Mlp::standard(state_dim, dim, 0.01, &mut rng)?;
        let critic = Mlp::standard(state_dim + dim, 1, 1.0, &mut rng)?;
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_opt: Adam::new(&actor, hyper.learning_rate),
            critic_opt: Adam::new(&critic, hyper.learning_rate),
            replay: ReplayBuffer::new(hyper.replay_capacity),
            rewards: RewardScaler::new(hyper.reward_scaling),
            scaler: ObservationScaler::new(state_dim),
            hyper,
            actor,
            critic,
            dim,
            rng,
        })
    }

    /// `tanh(actor(s))` at a scaled state.
    pub fn policy(&self, scaled_state: &[f64]) -> Result<Vec<f64>> {
        Ok(self.actor.forward(scaled_state)?.into_iter().map(f64::tanh).collect())
    }

    /// `∂Q(s, a)/∂a` at a scaled state.
    pub fn critic_action_gradient(&self, scaled_state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        let x = batch_matrix(&[&concat(scaled_state, action)])?;
        let trace = self.critic.forward_trace(&x)?;
        let (_, dx) = self.critic.backward(&trace, &Array2::ones((1, 1)))?;
        Ok(dx.row(0).iter().skip(scaled_state.len()).copied().collect())
    }

    /// Gradient of `−mean Q(s, tanh(actor(s)))` with respect to the actor's
    /// pre-squash outputs, one row per state.
    pub fn actor_upstream(&self, states: &Array2<f64>) -> Result<Array2<f64>> {
        let pre = self.actor.forward_batch(states)?;
        let act = pre.mapv(f64::tanh);
        let n = states.nrows();
        let mut input = Array2::zeros((n, states.ncols() + self.dim));
        input.slice_mut(s![.., ..states.ncols()]).assign(states);
        input.slice_mut(s![.., states.ncols()..]).assign(&act);
        let trace = self.critic.forward_trace(&input)?;
        let (_, dx) = self.critic.backward(&trace, &Array2::from_elem((n, 1), -1.0 / n as f64))?;
        let da = dx.slice(s![.., states.ncols()..]).to_owned();
        Ok(da * act.mapv(|a| 1.0 - a * a))
    }

    fn learn(&mut self, batch: &[Stored]) -> Result<(f64, f64)> {
        let n = batch.len() as f64;
        let nexts: Vec<&[f64]> = batch.iter().map(|t| t.next_state.as_slice()).collect();
        let s2 = batch_matrix(&nexts)?;
        let a2 = self.actor_target.forward_batch(&s2)?.mapv(f64::tanh);
        let next_in: Vec<Vec<f64>> = (0..batch.len()).map(|b| concat(&batch[b].next_state, &a2.row(b).to_vec())).collect();
        let q2 = self.critic_target.forward_batch(&batch_matrix(&next_in.iter().map(|v| v.as_slice()).collect::<Vec<_>>())?)?;

        let cur_in: Vec<Vec<f64>> = batch.iter().map(|t| concat(&t.state, &t.action)).collect();
        let ct = self.critic.forward_trace(&batch_matrix(&cur_in.iter().map(|v| v.as_slice()).collect::<Vec<_>>())?)?;
        let mut cu = Array2::zeros((batch.len(), 1));
        let mut critic_loss = 0.0;
        for (b, t) in batch.iter().enumerate() {
            let y = if t.terminal { t.reward } else { t.reward + self.hyper.discount * q2[(b, 0)] };
            let err = ct.output[(b, 0)] - y;
            critic_loss += err * err / n;
            cu[(b, 0)] = 2.0 * err / n;
        }
        let (cg, _) = self.critic.backward(&ct, &cu)?;
        self.critic_opt.step(&mut self.critic, &cg);

        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let s = batch_matrix(&states)?;
        let upstream = self.actor_upstream(&s)?;
        let at = self.actor.forward_trace(&s)?;
        let (ag, _) = self.actor.backward(&at, &upstream)?;
        self.actor_opt.step(&mut self.actor, &ag);
        let actor_loss = -self.mean_q(&s)?;

        self.actor_target.soft_update(&self.actor, self.hyper.target_rate);
        self.critic_target.soft_update(&self.critic, self.hyper.target_rate);
        Ok((actor_loss, critic_loss))
    }

    fn mean_q(&self, s: &Array2<f64>) -> Result<f64> {
        let act = self.actor.forward_batch(s)?.mapv(f64::tanh);
        let rows: Vec<Vec<f64>> = (0..s.nrows()).map(|b| concat(&s.row(b).to_vec(), &act.row(b).to_vec())).collect();
        let q = self.critic.forward_batch(&batch_matrix(&rows.iter().map(|v| v.as_slice()).collect::<Vec<_>>())?)?;
        Ok(q.mean().unwrap_or(0.0))
    }
}

impl Agent for Ddpg {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ddpg
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
        let mut a = self.policy(&x)?;
        if explore {
            for v in a.iter_mut() {
                *v = (*v + self.hyper.action_noise * normal(&mut self.rng)).clamp(-1.0, 1.0);
            }
        }
        Ok(Action::Continuous(a))
    }

    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>> {
        check_transition(t, self.state_dim())?;
        let action = t
            .action
            .values()
            .filter(|a| a.len() == self.dim)
            .ok_or_else(|| Error::InvalidArgument("DDPG action does not match its space".into()))?
            .to_vec();
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
        let (actor_loss, critic_loss) = self.learn(&batch)?;
        Ok(Some(vec![critic_loss, actor_loss]))
    }

    fn end_episode(&mut self) -> Result<Option<Losses>> {
        Ok(None)
    }

    fn value_estimate(&mut self, state: &[f64]) -> Option<f64> {
        let x = self.scaler.transform(state, false);
        let a = self.policy(&x).ok()?;
        self.critic.forward(&concat(&x, &a)).ok().map(|q| q[0])
    }

    fn exploration(&self) -> f64 {
        self.hyper.action_noise
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("actor", &self.actor),
            ("critic", &self.critic),
            ("actor_target", &self.actor_target),
            ("critic_target", &self.critic_target),
        ]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)> {
        vec![
            ("actor", &mut self.actor),
            ("critic", &mut self.critic),
            ("actor_target", &mut self.actor_target),
            ("critic_target", &mut self.critic_target),
        ]
    }

    fn scaler(&self) -> &ObservationScaler {
        &self.scaler
    }

    fn scaler_mut(&mut self) -> &mut ObservationScaler {
        &mut self.scaler
    }
}
