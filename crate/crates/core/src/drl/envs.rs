//! The clustering environment (one action = one configuration index) and the
//! per-subnetwork beamsteering environment (one action = a phase vector).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    beamsteer_bound, beamsteer_objective, cluster_problem, effective_channels, order_ues, run_pipeline,
    sinr_post_sic, solve_digital_beamforming, BeamMode, ChannelKernels, DigitalBeams, PipelineOptions,
    PipelineResult, SolveReport, SolverOptions, Steering,
};
use crate::channel::{sample_channel, sample_geometry, ChannelSet, Geometry, NetworkConfig};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::par::Execution;
use crate::partitioning::{enumerate_configs, ClusterConfig, ConfigSpace};

/// Floor applied before every logarithm of a SINR or rate.
pub const LOG_FLOOR: f64 = 1e-30;

fn floored_ln(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    /// Channels drawn once and held.
    #[default]
    Fixed,
    /// Fresh small-scale gains at every slot.
    Resample,
}

/// Beam stage run inside the clustering environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InnerBeams {
    /// All-ones steering, digital solve only.
    #[default]
    Conventional,
    /// Coordinate ascent of the steering objective.
    Optimized,
    /// Steering from trained beamsteering agents (driven by the orchestrator).
    Drl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringEnvOptions {
    pub csi: CsiMode,
    /// τ: slots accumulated per step.
    pub tau: usize,
    pub beams: InnerBeams,
    pub solver: SolverOptions,
    pub exec: Execution,
    pub cap: u64,
}

impl Default for ClusteringEnvOptions {
    fn default() -> Self {
        Self {
            csi: CsiMode::Fixed,
            tau: 1,
            beams: InnerBeams::Conventional,
            solver: SolverOptions::default(),
            exec: Execution::Parallel,
            cap: crate::partitioning::DEFAULT_CAP,
        }
    }
}

/// Result of one clustering step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    /// Per cluster: `Σ_t Σ_i ln γ_i` (floored).
    pub state: Vec<f64>,
    /// `Π_t Π_n Σ_i ln(1 + γ_i)`
    pub reward: f64,
    /// Natural log of `reward`, accumulated with the floor.
    pub log_reward: f64,
    /// Per-UE rate in bps/Hz, averaged over the τ slots.
    pub rates: Vec<f64>,
    /// Sum rate in bps/Hz, averaged over the τ slots.
    pub sum_rate: f64,
}

/// State and reward of one slot, from post-SIC SINRs.
pub fn cluster_slot_terms(cfg: &ClusterConfig, sinr: &[f64]) -> (Vec<f64>, f64) {
    let mut state = vec![0.0; cfg.clusters()];
    let mut log_reward = 0.0;
    for (n, s) in state.iter_mut().enumerate() {
        let ues = cfg.ues_of(n);
        *s = ues.iter().map(|&i| floored_ln(sinr[i])).sum();
        let rate: f64 = ues.iter().map(|&i| sinr[i].ln_1p()).sum();
        log_reward += floored_ln(rate);
    }
    (state, log_reward)
}

pub struct ClusteringEnv {
    net: NetworkConfig,
    space: ConfigSpace,
    geometry: Geometry,
    channels: ChannelSet,
    kernels: ChannelKernels,
    opts: ClusteringEnvOptions,
    rng: ChaCha8Rng,
    prev_combiners: Vec<Vec<C64>>,
    cache: Vec<Option<ClusterOutcome>>,
    slot: usize,
}

impl ClusteringEnv {
    /// Draws geometry and the first channel realization from `seed`.
    pub fn new(net: &NetworkConfig, opts: ClusteringEnvOptions, seed: u64) -> Result<Self> {
        net.validate()?;
        if opts.tau == 0 {
            return Err(Error::InvalidConfig("tau must be at least 1".into()));
        }
        let space = enumerate_configs(net.aps, net.ues, net.subnetworks, net.rf_chains(), opts.cap)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geometry = sample_geometry(net, &mut rng);
        let channels = sample_channel(&geometry, net, 0, &mut rng)?;
        Self::with_channels(net, space, geometry, channels, opts, rng)
    }

    fn with_channels(
        net: &NetworkConfig,
        space: ConfigSpace,
        geometry: Geometry,
        channels: ChannelSet,
        opts: ClusteringEnvOptions,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let kernels = ChannelKernels::new(&channels)?;
        let len = space.len();
        Ok(Self {
            prev_combiners: vec![vec![C64::new(1.0, 0.0); net.ue_antennas()]; net.ues],
            net: net.clone(),
            space,
            geometry,
            channels,
            kernels,
            opts,
            rng,
            cache: vec![None; len],
            slot: 0,
        })
    }

    pub fn network(&self) -> &NetworkConfig {
        &self.net
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn state_dim(&self) -> usize {
        self.net.subnetworks
    }

    pub fn action_count(&self) -> usize {
        self.space.len()
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn kernels(&self) -> &ChannelKernels {
        &self.kernels
    }

    pub fn prev_combiners(&self) -> &[Vec<C64>] {
        &self.prev_combiners
    }

    pub fn options(&self) -> &ClusteringEnvOptions {
        &self.opts
    }

    pub fn reset(&mut self) -> Vec<f64> {
        vec![0.0; self.state_dim()]
    }

    /// Draws the next slot's channels when CSI is resampled.
    pub fn advance(&mut self) -> Result<()> {
        if self.opts.csi == CsiMode::Resample {
            self.slot += 1;
            self.channels = sample_channel(&self.geometry, &self.net, self.slot, &mut self.rng)?;
            self.kernels = ChannelKernels::new(&self.channels)?;
        }
        Ok(())
    }

    fn default_mode(&self) -> BeamMode {
        match self.opts.beams {
            InnerBeams::Optimized => BeamMode::Optimized(Default::default()),
            _ => BeamMode::Conventional,
        }
    }

    /// Runs the hybrid pipeline for configuration `j` on the current channels.
    pub fn pipeline(&self, j: usize, mode: &BeamMode) -> Result<PipelineResult> {
        let cfg = self.space.config_from_index(j)?;
        let opts = PipelineOptions {
            mode: mode.clone(),
            solver: self.opts.solver.clone(),
            rounds: 2,
            exec: self.opts.exec,
        };
        run_pipeline(&self.net, cfg, &self.channels, &self.kernels, &self.prev_combiners, &opts)
            .map_err(|e| e.context(format!("configuration {j}")))
    }

    /// Evaluates configuration `j` over τ slots starting from the current
    /// channels, with the given beam stage.
    pub fn evaluate(&mut self, j: usize, mode: &BeamMode) -> Result<ClusterOutcome> {
        let cfg = self.space.config_from_index(j)?.clone();
        let mut state = vec![0.0; cfg.clusters()];
        let mut log_reward = 0.0;
        let mut rates = vec![0.0; self.net.ues];
        let tau = self.opts.tau;
        for t in 0..tau {
            if t > 0 {
                self.advance()?;
            }
            let res = self.pipeline(j, mode)?;
            let (s, lr) = cluster_slot_terms(&cfg, &res.sinr);
            state.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
            log_reward += lr;
            rates.iter_mut().zip(&res.rates).for_each(|(a, b)| *a += b / tau as f64);
            if !matches!(mode, BeamMode::Conventional) {
                self.prev_combiners = res.steering.ue.clone();
            }
        }
        let sum_rate = rates.iter().sum();
        Ok(ClusterOutcome {
            state,
            reward: log_reward.exp(),
            log_reward,
            rates,
            sum_rate,
        })
    }

    /// One environment step: fresh CSI if resampled, then evaluation of
    /// configuration `j` with the default beam stage. Fixed-CSI conventional
    /// outcomes are memoized per configuration.
    pub fn step(&mut self, j: usize) -> Result<ClusterOutcome> {
        if j >= self.space.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                size: self.space.len(),
            });
        }
        let cacheable = self.opts.csi == CsiMode::Fixed && self.opts.beams == InnerBeams::Conventional;
        if cacheable {
            if let Some(hit) = &self.cache[j] {
                return Ok(hit.clone());
            }
        }
        self.advance()?;
        let mode = self.default_mode();
        let out = self.evaluate(j, &mode)?;
        if cacheable {
            self.cache[j] = Some(out.clone());
        }
        Ok(out)
    }

    /// Best configuration under the default beam stage on the current
    /// channels (lowest index on ties), with every configuration's outcome.
    pub fn exhaustive(&mut self) -> Result<(usize, Vec<ClusterOutcome>)> {
        let mode = self.default_mode();
        let saved = (self.prev_combiners.clone(), self.channels.clone(), self.kernels.clone(), self.slot);
        let mut all = Vec::with_capacity(self.space.len());
        for j in 0..self.space.len() {
            (self.prev_combiners, self.channels, self.kernels, self.slot) = saved.clone();
            all.push(self.evaluate(j, &mode)?);
        }
        (self.prev_combiners, self.channels, self.kernels, self.slot) = saved;
        let mut best = 0;
        for (j, o) in all.iter().enumerate() {
            if o.reward > all[best].reward {
                best = j;
            }
        }
        Ok((best, all))
    }
}

/// Maps actions in [-1, 1] to phases `π(a + 1)` in [0, 2π].
pub fn phases_from_action(action: &[f64]) -> Vec<f64> {
    action.iter().map(|a| PI * (a.clamp(-1.0, 1.0) + 1.0)).collect()
}

/// Result of one beamsteering step.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamOutcome {
    /// Post-SIC SINR of each cluster UE (ascending UE index).
    pub state: Vec<f64>,
    /// Steering objective over its unit-modulus upper bound.
    pub reward: f64,
    /// Raw steering objective.
    pub objective: f64,
    /// Per-UE rate of the cluster in bps/Hz.
    pub rates: Vec<f64>,
    pub report: SolveReport,
}

/// Beamsteering environment of subnetwork `n` under a fixed configuration;
/// other clusters keep their steering and digital beams frozen.
pub struct BeamEnv {
    net: NetworkConfig,
    cfg: ClusterConfig,
    cluster: usize,
    channels: ChannelSet,
    kernels: ChannelKernels,
    base: Steering,
    frozen: DigitalBeams,
    prev_combiners: Vec<Vec<C64>>,
    solver: SolverOptions,
    bound: f64,
}

impl BeamEnv {
    pub fn new(
        net: &NetworkConfig,
        cfg: &ClusterConfig,
        cluster: usize,
        channels: &ChannelSet,
        prev_combiners: &[Vec<C64>],
        solver: &SolverOptions,
    ) -> Result<Self> {
        if cluster >= cfg.clusters() {
            return Err(Error::IndexOutOfRange {
                index: cluster,
                size: cfg.clusters(),
            });
        }
        if prev_combiners.len() != channels.ues {
            return Err(Error::dims("BeamEnv previous combiners", channels.ues, prev_combiners.len()));
        }
        let kernels = ChannelKernels::new(channels)?;
        let (a, u) = (net.ap_antennas(), net.ue_antennas());
        let bound = beamsteer_bound(cluster, cfg, &kernels, a, u);
        Ok(Self {
            net: net.clone(),
            cfg: cfg.clone(),
            cluster,
            channels: channels.clone(),
            kernels,
            base: Steering::all_ones(cfg, a, u),
            frozen: DigitalBeams::uniform(cfg),
            prev_combiners: prev_combiners.to_vec(),
            solver: solver.clone(),
            bound,
        })
    }

    /// Replaces the frozen steering and digital beams of the other clusters.
    pub fn freeze_others(&mut self, steering: Steering, digital: DigitalBeams) -> Result<()> {
        steering.validate(&self.cfg, self.net.ap_antennas(), self.net.ue_antennas())?;
        self.base = steering;
        self.frozen = digital;
        Ok(())
    }

    pub fn cluster(&self) -> usize {
        self.cluster
    }

    pub fn state_dim(&self) -> usize {
        self.cfg.ue_sizes()[self.cluster]
    }

    /// `D_A·a·D_U + D_U·u`
    pub fn action_dim(&self) -> usize {
        let (da, du) = (self.cfg.ap_sizes()[self.cluster], self.cfg.ue_sizes()[self.cluster]);
        da * self.net.ap_antennas() * du + du * self.net.ue_antennas()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Writes the phases into a copy of the base steering: each AP's
    /// `a × D_U` matrix row-major (ascending AP index), then each UE combiner.
    pub fn steering_from_phases(&self, phases: &[f64]) -> Result<Steering> {
        if phases.len() != self.action_dim() {
            return Err(Error::dims("beam action", self.action_dim(), phases.len()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("beam action"));
        }
        let mut s = self.base.clone();
        let mut it = phases.iter();
        for m in self.cfg.aps_of(self.cluster) {
            let (rows, cols) = s.ap[m].shape();
            for r in 0..rows {
                for c in 0..cols {
                    s.ap[m][(r, c)] = C64::from_polar(1.0, *it.next().expect("length checked"));
                }
            }
        }
        for k in self.cfg.ues_of(self.cluster) {
            for z in s.ue[k].iter_mut() {
                *z = C64::from_polar(1.0, *it.next().expect("length checked"));
            }
        }
        Ok(s)
    }

    /// Steering objective of the phases, normalized by the bound.
    pub fn reward_of(&self, phases: &[f64]) -> Result<f64> {
        let s = self.steering_from_phases(phases)?;
        let obj = beamsteer_objective(self.cluster, &self.cfg, &self.kernels, &s, &self.prev_combiners);
        Ok(if self.bound > 0.0 { obj / self.bound } else { 0.0 })
    }

    pub fn step(&self, phases: &[f64]) -> Result<BeamOutcome> {
        let steering = self.steering_from_phases(phases)?;
        let objective = beamsteer_objective(self.cluster, &self.cfg, &self.kernels, &steering, &self.prev_combiners);
        let eff = effective_channels(&self.net, &self.cfg, &self.channels, &steering)?;
        let order = order_ues(self.cluster, &self.cfg, &eff);
        let problem = cluster_problem(self.cluster, &self.cfg, &eff, &order, &self.frozen, self.net.sic_margin_w());
        let (w, report) = solve_digital_beamforming(&problem, &self.solver)?;
        let mut digital = self.frozen.clone();
        for (ml, m) in self.cfg.aps_of(self.cluster).into_iter().enumerate() {
            for (kl, col) in w.iter().enumerate() {
                digital.w[m][kl] = col[ml].clone();
            }
        }
        let ues = self.cfg.ues_of(self.cluster);
        let state: Vec<f64> = ues.iter().map(|&i| sinr_post_sic(i, &order, &self.cfg, &eff, &digital)).collect();
        let rates = state.iter().map(|g| (1.0 + g).log2()).collect();
        Ok(BeamOutcome {
            state,
            reward: if self.bound > 0.0 { objective / self.bound } else { 0.0 },
            objective,
            rates,
            report,
        })
    }

    /// Outcome at all-zero phases (all-ones steering).
    pub fn reset(&self) -> Result<BeamOutcome> {
        self.step(&vec![0.0; self.action_dim()])
    }

    /// Exhaustive search over `levels` uniform phases per entry; returns the
    /// best normalized reward and its phases (first found on ties).
    pub fn grid_optimum(&self, levels: usize) -> Result<(f64, Vec<f64>)> {
        let dim = self.action_dim();
        let total = (levels as f64).powi(dim as i32);
        if levels == 0 || total > 1e7 {
            return Err(Error::InvalidArgument(format!("{levels}^{dim} grid points is too many")));
        }
        let mut idx = vec![0usize; dim];
        let mut best = (f64::NEG_INFINITY, vec![0.0; dim]);
        loop {
            let phases: Vec<f64> = idx.iter().map(|&q| 2.0 * PI * q as f64 / levels as f64).collect();
            let r = self.reward_of(&phases)?;
            if r > best.0 {
                best = (r, phases);
            }
            let mut p = 0;
            loop {
                if p == dim {
                    return Ok(best);
                }
                idx[p] += 1;
                if idx[p] < levels {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }
}
