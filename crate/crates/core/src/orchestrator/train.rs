use std::time::{Duration, Instant};

use super::logs::{BeamStep, ClusterStep};
use super::plan::{BeamPlan, RunPlan};
use crate::beamforming::{BeamMode, Steering};
use crate::channel::NetworkConfig;
use crate::drl::{
    make_agent, phases_from_action, Action, ActionSpace, Agent, BeamEnv, ClusterOutcome, ClusteringEnv,
    ClusteringEnvOptions, Hyper, InnerBeams, Transition,
};
use crate::error::{Error, Result};
use crate::par::{derive_seed, map_vec, Execution};
use crate::partitioning::ClusterConfig;

pub(crate) const ENV_STREAM: u64 = 0;
pub(crate) const CLUSTER_AGENT_STREAM: u64 = 1;
pub(crate) const BEAM_AGENT_STREAM: u64 = 2;
pub(crate) const RANDOM_POLICY_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub exec: Execution,
    /// Progress lines on stderr.
    pub progress: bool,
}

/// Beamsteering agents indexed by subnetwork.
pub type BeamAgents = Vec<Option<Box<dyn Agent>>>;

pub struct Training {
    pub cluster_agent: Box<dyn Agent>,
    pub beam_agents: BeamAgents,
    pub cluster_log: Vec<ClusterStep>,
    pub beam_log: Vec<BeamStep>,
    pub wall_clock: Duration,
}

pub struct BeamTraining {
    pub agent: Box<dyn Agent>,
    pub log: Vec<BeamStep>,
    /// Reward of the greedy action after training.
    pub final_reward: f64,
    /// Best reward on the exhaustive phase grid, when requested.
    pub grid_optimum: Option<f64>,
    pub wall_clock: Duration,
}

/// The clustering environment of a plan; every run of the same plan sees the
/// same geometry and channel sequence.
pub fn clustering_env(plan: &RunPlan, beams: InnerBeams, exec: Execution) -> Result<ClusteringEnv> {
    let opts = ClusteringEnvOptions {
        csi: plan.csi,
        tau: plan.network.cluster_period,
        beams,
        solver: plan.solver.clone(),
        exec,
        ..ClusteringEnvOptions::default()
    };
    ClusteringEnv::new(&plan.network, opts, derive_seed(plan.seed, ENV_STREAM))
}

fn continuous(a: &Action) -> Result<&[f64]> {
    a.values().ok_or_else(|| Error::InvalidArgument("beamsteering agent returned a discrete action".into()))
}

fn discrete(a: &Action) -> Result<usize> {
    a.index().ok_or_else(|| Error::InvalidArgument("clustering agent returned a continuous action".into()))
}

/// Trains `agent` on one beam environment and returns the greedy phases at
/// the environment's initial state.
fn run_beam_episodes(
    env: &BeamEnv,
    agent: &mut dyn Agent,
    plan: &BeamPlan,
    outer: (usize, usize),
    log: &mut Vec<BeamStep>,
) -> Result<Vec<f64>> {
    for e in 0..plan.episodes {
        let mut s = env.reset()?.state;
        for t in 0..plan.steps {
            let ctx = |err: Error| err.context(format!("beam episode {e}, step {t}, cluster {}", env.cluster()));
            let action = agent.act(&s, true).map_err(ctx)?;
            let out = env.step(&phases_from_action(continuous(&action)?)).map_err(ctx)?;
            let value = agent.value_estimate(&s);
            let exploration = agent.exploration();
            let losses = agent
                .observe(&Transition {
                    state: s,
                    action,
                    reward: out.reward,
                    next_state: out.state.clone(),
                    terminal: t + 1 == plan.steps,
                })
                .map_err(ctx)?;
            log.push(BeamStep {
                outer_episode: outer.0,
                outer_step: outer.1,
                cluster: env.cluster(),
                episode: e,
                step: t,
                algorithm: plan.algorithm,
                reward: out.reward,
                objective: out.objective,
                rates: out.rates,
                losses: losses.unwrap_or_default(),
                value,
                exploration,
            });
            s = out.state;
        }
        if let Some(l) = agent.end_episode()? {
            if let Some(last) = log.last_mut() {
                last.losses = l;
            }
        }
    }
    greedy_phases(env, agent)
}

fn greedy_phases(env: &BeamEnv, agent: &mut dyn Agent) -> Result<Vec<f64>> {
    let s0 = env.reset()?.state;
    Ok(phases_from_action(continuous(&agent.act(&s0, false)?)?))
}

fn beam_agent_for(
    existing: Option<Box<dyn Agent>>,
    env: &BeamEnv,
    plan: &BeamPlan,
    hyper: &Hyper,
    seed: u64,
) -> Result<Box<dyn Agent>> {
    let space = ActionSpace::Continuous(env.action_dim());
    match existing {
        Some(a) if a.state_dim() == env.state_dim() && a.action_space() == space => Ok(a),
        _ => make_agent(plan.algorithm, env.state_dim(), space, hyper, seed),
    }
}

/// Copies cluster `n`'s entries of `from` into `into`.
fn merge_cluster(into: &mut Steering, from: &Steering, cfg: &ClusterConfig, n: usize) {
    for m in cfg.aps_of(n) {
        into.ap[m] = from.ap[m].clone();
    }
    for k in cfg.ues_of(n) {
        into.ue[k] = from.ue[k].clone();
    }
}

struct BeamStage<'a> {
    net: &'a NetworkConfig,
    plan: &'a RunPlan,
    hyper: &'a Hyper,
    exec: Execution,
}

impl BeamStage<'_> {
    /// Trains every subnetwork's agent on the current channels (in parallel)
    /// and returns the combined greedy steering.
    fn train(
        &self,
        env: &ClusteringEnv,
        cfg: &ClusterConfig,
        agents: &mut BeamAgents,
        outer: (usize, usize),
        outer_index: u64,
        log: &mut Vec<BeamStep>,
    ) -> Result<Steering> {
        let jobs: Vec<(usize, Option<Box<dyn Agent>>)> = (0..cfg.clusters()).map(|n| (n, agents[n].take())).collect();
        let bp = &self.plan.beamsteering;
        let results = map_vec(self.exec, jobs, |(n, existing)| {
            let benv = BeamEnv::new(self.net, cfg, n, env.channels(), env.prev_combiners(), &self.plan.solver)?;
            let seed = derive_seed(derive_seed(self.plan.seed, BEAM_AGENT_STREAM + n as u64), outer_index);
            let mut agent = beam_agent_for(existing, &benv, bp, self.hyper, seed)?;
            let mut steps = Vec::new();
            let phases = run_beam_episodes(&benv, agent.as_mut(), bp, outer, &mut steps)?;
            let steering = benv.steering_from_phases(&phases)?;
            Ok::<_, Error>((agent, steps, steering))
        });
        let mut combined = Steering::all_ones(cfg, self.net.ap_antennas(), self.net.ue_antennas());
        for (n, r) in results.into_iter().enumerate() {
            let (agent, steps, steering) = r.map_err(|e| e.context(format!("cluster {n}")))?;
            merge_cluster(&mut combined, &steering, cfg, n);
            agents[n] = Some(agent);
            log.extend(steps);
        }
        Ok(combined)
    }

    /// Greedy steering from trained agents; subnetworks without a matching
    /// agent keep all-ones steering.
    fn greedy(&self, env: &ClusteringEnv, cfg: &ClusterConfig, agents: &mut BeamAgents) -> Result<Steering> {
        let mut combined = Steering::all_ones(cfg, self.net.ap_antennas(), self.net.ue_antennas());
        for n in 0..cfg.clusters() {
            let benv = BeamEnv::new(self.net, cfg, n, env.channels(), env.prev_combiners(), &self.plan.solver)?;
            let space = ActionSpace::Continuous(benv.action_dim());
            if let Some(agent) = agents.get_mut(n).and_then(|a| a.as_mut()) {
                if agent.state_dim() == benv.state_dim() && agent.action_space() == space {
                    let phases = greedy_phases(&benv, agent.as_mut())?;
                    merge_cluster(&mut combined, &benv.steering_from_phases(&phases)?, cfg, n);
                }
            }
        }
        Ok(combined)
    }
}

/// Greedy steering of `cfg` from `agents` on the environment's current channels.
pub(crate) fn greedy_steering(
    plan: &RunPlan,
    env: &ClusteringEnv,
    cfg: &ClusterConfig,
    agents: &mut BeamAgents,
) -> Result<Steering> {
    let hyper = plan.hyper(1)?;
    let stage = BeamStage {
        net: &plan.network,
        plan,
        hyper: &hyper,
        exec: Execution::Sequential,
    };
    stage.greedy(env, cfg, agents)
}

fn train_levels(plan: &RunPlan, beams: InnerBeams, opts: RunOptions) -> Result<Training> {
    plan.validate()?;
    let start = Instant::now();
    let cp = &plan.clustering;
    let mut env = clustering_env(plan, beams, opts.exec)?;
    let hyper = plan.hyper(cp.episodes * cp.steps)?;
    let space = ActionSpace::Discrete(env.action_count());
    let mut agent = make_agent(cp.algorithm, env.state_dim(), space, &hyper, derive_seed(plan.seed, CLUSTER_AGENT_STREAM))?;
    let beam_hyper = plan.hyper(plan.beamsteering.episodes * plan.beamsteering.steps)?;
    let stage = BeamStage {
        net: &plan.network,
        plan,
        hyper: &beam_hyper,
        exec: opts.exec,
    };
    let mut beam_agents: BeamAgents = (0..plan.network.subnetworks).map(|_| None).collect();
    let mut cluster_log = Vec::with_capacity(cp.episodes * cp.steps);
    let mut beam_log = Vec::new();

    for e in 0..cp.episodes {
        let mut s = env.reset();
        for t in 0..cp.steps {
            let ctx = |err: Error| err.context(format!("episode {e}, step {t}"));
            let action = agent.act(&s, true).map_err(ctx)?;
            let j = discrete(&action)?;
            let out: ClusterOutcome = if beams == InnerBeams::Drl {
                env.advance().map_err(ctx)?;
                let cfg = env.space().config_from_index(j)?.clone();
                let index = (e * cp.steps + t) as u64;
                let steering = stage.train(&env, &cfg, &mut beam_agents, (e, t), index, &mut beam_log).map_err(ctx)?;
                env.evaluate(j, &BeamMode::Given(steering)).map_err(ctx)?
            } else {
                env.step(j).map_err(ctx)?
            };
            let value = agent.value_estimate(&s);
            let exploration = agent.exploration();
            let losses = agent
                .observe(&Transition {
                    state: s,
                    action,
                    reward: out.reward,
                    next_state: out.state.clone(),
                    terminal: t + 1 == cp.steps,
                })
                .map_err(ctx)?;
            cluster_log.push(ClusterStep {
                episode: e,
                step: t,
                algorithm: cp.algorithm,
                action: j,
                reward: out.reward,
                log_reward: out.log_reward,
                sum_rate: out.sum_rate,
                rates: out.rates,
                losses: losses.unwrap_or_default(),
                value,
                exploration,
            });
            s = out.state;
        }
        if let Some(l) = agent.end_episode()? {
            if let Some(last) = cluster_log.last_mut() {
                last.losses = l;
            }
        }
        if opts.progress && ((e + 1) % (cp.episodes / 10).max(1) == 0 || e + 1 == cp.episodes) {
            let tail = &cluster_log[cluster_log.len() - cp.steps..];
            let mean = tail.iter().map(|r| r.reward).sum::<f64>() / cp.steps as f64;
            eprintln!("episode {}/{}: mean reward {mean:.4e}", e + 1, cp.episodes);
        }
    }
    Ok(Training {
        cluster_agent: agent,
        beam_agents,
        cluster_log,
        beam_log,
        wall_clock: start.elapsed(),
    })
}

/// Clustering training with the plan's inner beam stage.
pub fn train_clustering(plan: &RunPlan, opts: RunOptions) -> Result<Training> {
    train_levels(plan, plan.clustering.beams, opts)
}

/// The two-timescale loop: at every clustering step each subnetwork's
/// beamsteering agent trains on the current channels, the combined greedy
/// steering feeds the digital solve, and the clustering agent learns from
/// the resulting reward.
pub fn train_hierarchical(plan: &RunPlan, opts: RunOptions) -> Result<Training> {
    train_levels(plan, InnerBeams::Drl, opts)
}

/// Trains one beamsteering agent on subnetwork `plan.beamsteering.cluster` of
/// configuration `plan.beamsteering.config`, on the plan's first channel draw.
pub fn train_beamsteering(plan: &RunPlan, opts: RunOptions) -> Result<BeamTraining> {
    plan.validate()?;
    let start = Instant::now();
    let bp = &plan.beamsteering;
    let env = clustering_env(plan, InnerBeams::Conventional, opts.exec)?;
    let cfg = env.space().config_from_index(bp.config).map_err(|e| e.context("beamsteering config"))?;
    let benv = BeamEnv::new(&plan.network, cfg, bp.cluster, env.channels(), env.prev_combiners(), &plan.solver)?;
    let hyper = plan.hyper(bp.episodes * bp.steps)?;
    let seed = derive_seed(derive_seed(plan.seed, BEAM_AGENT_STREAM + bp.cluster as u64), 0);
    let mut agent = beam_agent_for(None, &benv, bp, &hyper, seed)?;
    let mut log = Vec::with_capacity(bp.episodes * bp.steps);
    let phases = run_beam_episodes(&benv, agent.as_mut(), bp, (0, 0), &mut log)?;
    let final_reward = benv.reward_of(&phases)?;
    let grid_optimum = match bp.grid_levels {
        0 => None,
        levels => Some(benv.grid_optimum(levels)?.0),
    };
    Ok(BeamTraining {
        agent,
        log,
        final_reward,
        grid_optimum,
        wall_clock: start.elapsed(),
    })
}
