use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::{
    argmax, check_state, check_transition, new_rng, sample_categorical, Action, ActionSpace, Agent, Algorithm, Hyper,
    Losses, RewardScaler, Transition,
};
use crate::drl::mlp::{batch_matrix, softmax, Mlp};
use crate::drl::normalize::ObservationScaler;
use crate::drl::optim::Adam;
use crate::error::{Error, Result};

/// One-step advantage actor-critic with a softmax actor and a state-value
/// critic; the advantage is `r + ζ·V(s′) − V(s)`.
pub struct ActorCritic {
    hyper: Hyper,
    actor: Mlp,
    critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    scaler: ObservationScaler,
    rewards: RewardScaler,
    actions: usize,
    rng: ChaCha8Rng,
}

impl ActorCritic {
    pub fn new(state_dim: usize, actions: usize, hyper: Hyper, seed: u64) -> Result<Self> {
        let mut rng = new_rng(seed);
        let actor = Mlp::standard(state_dim, actions, 0.01, &mut rng)?;
        let critic = Mlp::standard(state_dim, 1, 1.0, &mut rng)?;
        Ok(Self {
            actor_opt: Adam::new(&actor, hyper.learning_rate),
            critic_opt: Adam::new(&critic, hyper.learning_rate),
            rewards: RewardScaler::new(hyper.reward_scaling),
            scaler: ObservationScaler::new(state_dim),
            hyper,
            actor,
            critic,
            actions,
            rng,
        })
    }

    /// Critic value at an already scaled state.
    pub fn value(&self, scaled_state: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(scaled_state)?[0])
    }

    /// One update from scaled states; returns (actor loss, critic loss) and
    /// the advantage used.
    pub fn update(&mut self, s: &[f64], a: usize, r: f64, s2: &[f64], terminal: bool) -> Result<(f64, f64, f64)> {
        let v_next = if terminal { 0.0 } else { self.value(s2)? };
        let y = r + self.hyper.discount * v_next;
        let x = batch_matrix(&[s])?;
        let ct = self.critic.forward_trace(&x)?;
        let advantage = y - ct.output[(0, 0)];
        let mut cu = Array2::zeros((1, 1));
        cu[(0, 0)] = -2.0 * advantage;
        let (cg, _) = self.critic.backward(&ct, &cu)?;

        let at = self.actor.forward_trace(&x)?;
        let p = softmax(&at.output.row(0).to_vec());
        let mut au = Array2::zeros(at.output.dim());
        for (j, pj) in p.iter().enumerate() {
            let ind = if j == a { 1.0 } else { 0.0 };
            au[(0, j)] = -advantage * (ind - pj);
        }
        let (ag, _) = self.actor.backward(&at, &au)?;
        self.critic_opt.step(&mut self.critic, &cg);
        self.actor_opt.step(&mut self.actor, &ag);
        Ok((-advantage * p[a].max(1e-300).ln(), advantage * advantage, advantage))
    }
}

impl Agent for ActorCritic {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ac
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
        let p = softmax(&self.actor.forward(&x)?);
        Ok(Action::Discrete(if explore { sample_categorical(&p, &mut self.rng) } else { argmax(&p) }))
    }

    fn observe(&mut self, t: &Transition) -> Result<Option<Losses>> {
        check_transition(t, self.state_dim())?;
        let a = t
            .action
            .index()
            .filter(|&a| a < self.actions)
            .ok_or_else(|| Error::InvalidArgument("actor-critic action out of range".into()))?;
        let s = self.scaler.transform(&t.state, false);
        let s2 = self.scaler.transform(&t.next_state, false);
        let r = self.rewards.scale(t.reward);
        let (actor_loss, critic_loss, _) = self.update(&s, a, r, &s2, t.terminal)?;
        Ok(Some(vec![actor_loss, critic_loss]))
    }

    fn end_episode(&mut self) -> Result<Option<Losses>> {
        Ok(None)
    }

    fn value_estimate(&mut self, state: &[f64]) -> Option<f64> {
        let x = self.scaler.transform(state, false);
        self.value(&x).ok()
    }

    fn exploration(&self) -> f64 {
        0.0
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![("actor", &self.actor), ("critic", &self.critic)]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Mlp)> {
        vec![("actor", &mut self.actor), ("critic", &mut self.critic)]
    }

    fn scaler(&self) -> &ObservationScaler {
        &self.scaler
    }

    fn scaler_mut(&mut self) -> &mut ObservationScaler {
        &mut self.scaler
    }
}
