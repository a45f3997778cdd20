//! End-to-end hybrid pipeline for one slot: analog steering, effective
//! channels, SIC ordering and per-cluster digital solves.

use super::{
    dft_steering, effective_channels, isni, optimize_steering, order_ues, sinr_post_sic, solve_digital_beamforming,
    sum_rate, ChannelKernels, DigitalBeams, EffectiveChannels, P3Problem, SolveReport, SolverOptions, Steering,
    SteeringSearch,
};
use crate::channel::{ChannelSet, NetworkConfig};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::par::{map_indexed, Execution};
use crate::partitioning::ClusterConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum BeamMode {
    /// All-ones steering and combiners.
    Conventional,
    /// Coordinate ascent of the steering objective per cluster.
    Optimized(SteeringSearch),
    /// Steering supplied by the caller (e.g. a beamsteering agent).
    Given(Steering),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub mode: BeamMode,
    pub solver: SolverOptions,
    /// Digital solve rounds; each round freezes the other clusters' beams.
    pub rounds: usize,
    pub exec: Execution,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            mode: BeamMode::Optimized(SteeringSearch::default()),
            solver: SolverOptions::default(),
            rounds: 2,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub steering: Steering,
    pub digital: DigitalBeams,
    pub effective: EffectiveChannels,
    /// Global UE indices per cluster, ascending SIC order.
    pub orders: Vec<Vec<usize>>,
    /// Post-SIC SINR per UE.
    pub sinr: Vec<f64>,
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub cluster_rates: Vec<f64>,
    /// Steering objective per cluster.
    pub steering_objective: Vec<f64>,
    /// Last-round solver report per cluster.
    pub reports: Vec<SolveReport>,
}

fn steer(
    net: &NetworkConfig,
    cfg: &ClusterConfig,
    kernels: &ChannelKernels,
    prev: &[Vec<C64>],
    opts: &PipelineOptions,
) -> Result<Steering> {
    let (a, u) = (net.ap_antennas(), net.ue_antennas());
    match &opts.mode {
        BeamMode::Conventional => Ok(Steering::all_ones(cfg, a, u)),
        BeamMode::Given(s) => {
            s.validate(cfg, a, u)?;
            Ok(s.clone())
        }
        BeamMode::Optimized(search) => {
            let base = Steering::all_ones(cfg, a, u);
            let per_cluster = map_indexed(opts.exec, cfg.clusters(), |n| {
                let mut s = base.clone();
                if search.dft_start {
                    for m in cfg.aps_of(n) {
                        let (r, c) = s.ap[m].shape();
                        s.ap[m] = dft_steering(r, c);
                    }
                }
                optimize_steering(n, cfg, kernels, &mut s, prev, search);
                s
            });
            let mut out = base;
            for (m, &n) in cfg.ap_cluster().iter().enumerate() {
                out.ap[m] = per_cluster[n].ap[m].clone();
            }
            for (k, &n) in cfg.ue_cluster().iter().enumerate() {
                out.ue[k] = per_cluster[n].ue[k].clone();
            }
            Ok(out)
        }
    }
}

/// Builds the P3 instance of cluster `n` with other clusters frozen at `frozen`.
pub(crate) fn cluster_problem(
    n: usize,
    cfg: &ClusterConfig,
    eff: &EffectiveChannels,
    order: &[usize],
    frozen: &DigitalBeams,
    eps: f64,
) -> P3Problem {
    let ues = cfg.ues_of(n);
    let aps = cfg.aps_of(n);
    let local = |k: usize| ues.iter().position(|&x| x == k).expect("UE in cluster");
    P3Problem {
        dim: ues.len(),
        rows: ues.iter().map(|&i| aps.iter().map(|&m| eff.row(i, m).to_vec()).collect()).collect(),
        order: order.iter().map(|&k| local(k)).collect(),
        floor: ues.iter().map(|&i| isni(i, cfg, eff, frozen) + eff.noise[i]).collect(),
        eps,
    }
}

/// Runs the whole hybrid pipeline for one slot. `prev_combiners` holds the
/// previous slot's combiner of every UE (all ones at the first slot).
pub fn run_pipeline(
    net: &NetworkConfig,
    cfg: &ClusterConfig,
    channels: &ChannelSet,
    kernels: &ChannelKernels,
    prev_combiners: &[Vec<C64>],
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    if prev_combiners.len() != channels.ues {
        return Err(Error::dims("previous combiners", channels.ues, prev_combiners.len()));
    }
    cfg.validate(net.rf_chains())?;
    let steering = steer(net, cfg, kernels, prev_combiners, opts)?;
    let eff = effective_channels(net, cfg, channels, &steering)?;
    let clusters = cfg.clusters();
    let orders: Vec<Vec<usize>> = (0..clusters).map(|n| order_ues(n, cfg, &eff)).collect();
    let eps = net.sic_margin_w();

    let mut digital = DigitalBeams::uniform(cfg);
    let mut reports = Vec::new();
    for _ in 0..opts.rounds.max(1) {
        let frozen = digital.clone();
        let solved = map_indexed(opts.exec, clusters, |n| {
            let p = cluster_problem(n, cfg, &eff, &orders[n], &frozen, eps);
            solve_digital_beamforming(&p, &opts.solver).map_err(|e| e.context(format!("cluster {n}")))
        });
        reports.clear();
        for (n, r) in solved.into_iter().enumerate() {
            let (w, report) = r?;
            for (ml, m) in cfg.aps_of(n).into_iter().enumerate() {
                for (kl, col) in w.iter().enumerate() {
                    digital.w[m][kl] = col[ml].clone();
                }
            }
            reports.push(report);
        }
    }

    let mut sinr = vec![0.0; channels.ues];
    for order in &orders {
        for &i in order {
            sinr[i] = sinr_post_sic(i, order, cfg, &eff, &digital);
        }
    }
    let (rates, total) = sum_rate(&sinr);
    let cluster_rates = (0..clusters).map(|n| cfg.ues_of(n).iter().map(|&i| rates[i]).sum()).collect();
    let steering_objective = (0..clusters)
        .map(|n| super::beamsteer_objective(n, cfg, kernels, &steering, prev_combiners))
        .collect();
    Ok(PipelineResult {
        steering,
        digital,
        effective: eff,
        orders,
        sinr,
        rates,
        sum_rate: total,
        cluster_rates,
        steering_objective,
        reports,
    })
}

/// All-ones analog stage followed by the digital solve.
pub fn conventional_baseline(
    net: &NetworkConfig,
    cfg: &ClusterConfig,
    channels: &ChannelSet,
    kernels: &ChannelKernels,
    prev_combiners: &[Vec<C64>],
    solver: &SolverOptions,
    exec: Execution,
) -> Result<PipelineResult> {
    let opts = PipelineOptions {
        mode: BeamMode::Conventional,
        solver: solver.clone(),
        rounds: 2,
        exec,
    };
    run_pipeline(net, cfg, channels, kernels, prev_combiners, &opts)
}
