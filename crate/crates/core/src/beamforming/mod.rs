//! Hybrid beamforming: analog steering objective, effective channels, SIC
//! ordering, SINR and sum rate, plus the digital solver and full pipeline.

mod pipeline;
mod solver;
mod steering;

pub(crate) use pipeline::cluster_problem;
pub use pipeline::{conventional_baseline, run_pipeline, BeamMode, PipelineOptions, PipelineResult};
pub use solver::{
    cluster_objective, margin_violation, solve_digital_beamforming, ClusterBeams, P3Problem, SolveReport,
    SolverOptions,
};
pub use steering::{dft_steering, optimize_steering, SteeringSearch};

use crate::channel::{ChannelSet, NetworkConfig};
use crate::error::{Error, Result};
use crate::linalg::{null_bases, svd, vec_norm_sqr, ComplexMatrix, C64};
use crate::partitioning::ClusterConfig;

/// Analog steering of every node: `A_m` (a × D_U of m's cluster) per AP and a
/// unit-modulus combiner per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct Steering {
    pub ap: Vec<ComplexMatrix>,
    pub ue: Vec<Vec<C64>>,
}

impl Steering {
    /// All-ones steering and combiners (every phase zero).
    pub fn all_ones(cfg: &ClusterConfig, ap_antennas: usize, ue_antennas: usize) -> Self {
        let du = cfg.ue_sizes();
        let ap = cfg
            .ap_cluster()
            .iter()
            .map(|&n| ComplexMatrix::from_fn(ap_antennas, du[n], |_, _| C64::new(1.0, 0.0)))
            .collect();
        let ue = vec![vec![C64::new(1.0, 0.0); ue_antennas]; cfg.ue_cluster().len()];
        Self { ap, ue }
    }

    /// Checks shapes against the configuration and the unit-modulus constraints.
    pub fn validate(&self, cfg: &ClusterConfig, ap_antennas: usize, ue_antennas: usize) -> Result<()> {
        let du = cfg.ue_sizes();
        if self.ap.len() != cfg.ap_cluster().len() || self.ue.len() != cfg.ue_cluster().len() {
            return Err(Error::dims(
                "Steering::validate",
                format!("{} APs, {} UEs", cfg.ap_cluster().len(), cfg.ue_cluster().len()),
                format!("{} APs, {} UEs", self.ap.len(), self.ue.len()),
            ));
        }
        for (a, &n) in self.ap.iter().zip(cfg.ap_cluster()) {
            if a.shape() != (ap_antennas, du[n]) {
                return Err(Error::dims("steering matrix", format!("{:?}", (ap_antennas, du[n])), format!("{:?}", a.shape())));
            }
        }
        if let Some(d) = self.ue.iter().find(|d| d.len() != ue_antennas) {
            return Err(Error::dims("combiner", ue_antennas, d.len()));
        }
        let unit = |z: &C64| (z.norm() - 1.0).abs() <= 1e-9;
        if !self.ap.iter().all(|a| a.as_slice().iter().all(unit)) || !self.ue.iter().all(|d| d.iter().all(unit)) {
            return Err(Error::InvalidArgument("steering entries must have unit modulus".into()));
        }
        Ok(())
    }
}

/// Unit-modulus entries from phases.
pub fn phases_to_unit(phases: &[f64]) -> Vec<C64> {
    phases.iter().map(|&p| C64::from_polar(1.0, p)).collect()
}

/// Digital beamforming vectors: `w[m][q]` is the column for the `q`-th UE
/// (ascending UE index) of AP `m`'s cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalBeams {
    pub w: Vec<Vec<Vec<f64>>>,
}

impl DigitalBeams {
    /// Every column `1/sqrt(D_U)` in each entry.
    pub fn uniform(cfg: &ClusterConfig) -> Self {
        let du = cfg.ue_sizes();
        let w = cfg
            .ap_cluster()
            .iter()
            .map(|&n| vec![vec![1.0 / (du[n] as f64).sqrt(); du[n]]; du[n]])
            .collect();
        Self { w }
    }

    pub fn zeros(cfg: &ClusterConfig) -> Self {
        let du = cfg.ue_sizes();
        let w = cfg.ap_cluster().iter().map(|&n| vec![vec![0.0; du[n]]; du[n]]).collect();
        Self { w }
    }

    pub fn max_column_norm(&self) -> f64 {
        self.w
            .iter()
            .flatten()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `δᵀ·H·A`
pub fn effective_channel(delta: &[C64], h: &ComplexMatrix, a: &ComplexMatrix) -> Result<Vec<C64>> {
    if h.cols() != a.rows() {
        return Err(Error::dims("effective_channel", h.cols(), a.rows()));
    }
    let row = h.left_mul_row(delta)?;
    a.left_mul_row(&row)
}

/// Effective channel rows of every UE towards every AP under one steering.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    pub aps: usize,
    /// Indexed `i * M + m`; length is the D_U of AP `m`'s cluster.
    pub rows: Vec<Vec<C64>>,
    /// Noise term `σ̃_i · Σ_q |δ_{i,q}|²` per UE.
    pub noise: Vec<f64>,
}

impl EffectiveChannels {
    pub fn row(&self, i: usize, m: usize) -> &[C64] {
        &self.rows[i * self.aps + m]
    }
}

/// `σ̃ = (σ·D_U / (2P))²` with σ the noise power in watts.
pub fn noise_factor(noise_w: f64, cluster_ues: usize, tx_power_w: f64) -> f64 {
    let x = noise_w * cluster_ues as f64 / (2.0 * tx_power_w);
    x * x
}

pub fn effective_channels(
    net: &NetworkConfig,
    cfg: &ClusterConfig,
    channels: &ChannelSet,
    steering: &Steering,
) -> Result<EffectiveChannels> {
    let (m_count, k_count) = (channels.aps, channels.ues);
    if cfg.ap_cluster().len() != m_count || cfg.ue_cluster().len() != k_count {
        return Err(Error::dims("effective_channels", format!("{m_count} APs, {k_count} UEs"), "configuration of other size"));
    }
    let du = cfg.ue_sizes();
    let mut rows = Vec::with_capacity(m_count * k_count);
    for i in 0..k_count {
        for m in 0..m_count {
            rows.push(effective_channel(&steering.ue[i], channels.h(i, m), &steering.ap[m])?);
        }
    }
    let noise = (0..k_count)
        .map(|i| {
            let n = cfg.ue_cluster()[i];
            noise_factor(net.noise_power_w(), du[n], net.tx_power_w()) * vec_norm_sqr(&steering.ue[i])
        })
        .collect();
    Ok(EffectiveChannels {
        aps: m_count,
        rows,
        noise,
    })
}

/// Per-link kernels of the steering objective: the range side
/// `U1U1*·H·V1V1*` (u×a, so the term is `‖δᵀ·G·A‖²`) and the null side
/// `‖H‖_F·V0V0*` (a×a, so the term is `‖δ‖²·‖G·A‖²_F`).
#[derive(Debug, Clone)]
pub struct ChannelKernels {
    pub aps: usize,
    pub range: Vec<ComplexMatrix>,
    pub null: Vec<ComplexMatrix>,
    pub sigma_max: Vec<f64>,
    /// `‖H‖_F²` per link.
    pub gain: Vec<f64>,
}

impl ChannelKernels {
    pub fn new(channels: &ChannelSet) -> Result<Self> {
        let mut range = Vec::with_capacity(channels.matrices.len());
        let mut null = Vec::with_capacity(channels.matrices.len());
        let mut sigma_max = Vec::with_capacity(channels.matrices.len());
        let mut gains = Vec::with_capacity(channels.matrices.len());
        for h in &channels.matrices {
            let f = svd(h)?;
            let nb = null_bases(&f);
            let left = nb.u1.matmul(&nb.u1.adjoint())?;
            let right = nb.v1.matmul(&nb.v1.adjoint())?;
            range.push(left.matmul(h)?.matmul(&right)?);
            let gain = h.frobenius_norm();
            null.push(nb.v0.matmul(&nb.v0.adjoint())?.scale(C64::new(gain, 0.0)));
            sigma_max.push(f.sigma.first().copied().unwrap_or(0.0));
            gains.push(gain * gain);
        }
        Ok(Self {
            aps: channels.aps,
            range,
            null,
            sigma_max,
            gain: gains,
        })
    }

    pub fn range(&self, k: usize, m: usize) -> &ComplexMatrix {
        &self.range[k * self.aps + m]
    }

    pub fn null(&self, k: usize, m: usize) -> &ComplexMatrix {
        &self.null[k * self.aps + m]
    }
}

fn projected_power(delta: &[C64], g: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    let row = g.left_mul_row(delta).expect("kernel shape");
    vec_norm_sqr(&a.left_mul_row(&row).expect("steering shape"))
}

/// The secrecy sum power gain of cluster `n`: range-side power of every
/// in-cluster link under the current combiners, plus the power of each
/// in-cluster steering matrix inside the null space of every out-of-cluster
/// link. The null-side power is weighted by the link's total gain `‖H‖_F²`
/// and the energy of that UE's previous combiner, the same factors the
/// range side carries; projecting the combiner itself onto the left null
/// space would zero the term whenever a link has full row rank.
pub fn beamsteer_objective(
    n: usize,
    cfg: &ClusterConfig,
    kernels: &ChannelKernels,
    steering: &Steering,
    prev_combiners: &[Vec<C64>],
) -> f64 {
    let mut total = 0.0;
    for m in cfg.aps_of(n) {
        let a = &steering.ap[m];
        for (k, &c) in cfg.ue_cluster().iter().enumerate() {
            total += if c == n {
                projected_power(&steering.ue[k], kernels.range(k, m), a)
            } else {
                let g = kernels.null(k, m).matmul(a).expect("steering shape");
                vec_norm_sqr(&prev_combiners[k]) * g.frobenius_norm().powi(2)
            };
        }
    }
    total
}

/// Upper bound of [`beamsteer_objective`] over all unit-modulus steerings:
/// each in-cluster term is at most `u·σ_max²·a·D_U`, each out-of-cluster
/// term at most `u·‖H‖_F²·a·D_U`.
pub fn beamsteer_bound(n: usize, cfg: &ClusterConfig, kernels: &ChannelKernels, ap_antennas: usize, ue_antennas: usize) -> f64 {
    let du = cfg.ue_sizes()[n] as f64;
    let mut total = 0.0;
    for m in cfg.aps_of(n) {
        for (k, &c) in cfg.ue_cluster().iter().enumerate() {
            let link = k * kernels.aps + m;
            let g = if c == n { kernels.sigma_max[link].powi(2) } else { kernels.gain[link] };
            total += ue_antennas as f64 * ap_antennas as f64 * du * g;
        }
    }
    total
}

/// Sorts the UEs of cluster `n` ascending by in-cluster effective gain over
/// their own inter-subnetwork gain; ties by UE index.
pub fn order_ues(n: usize, cfg: &ClusterConfig, eff: &EffectiveChannels) -> Vec<usize> {
    let aps_in: Vec<usize> = cfg.aps_of(n);
    let aps_out: Vec<usize> = (0..eff.aps).filter(|m| cfg.ap_cluster()[*m] != n).collect();
    let mut ues: Vec<(usize, f64)> = cfg
        .ues_of(n)
        .into_iter()
        .map(|i| {
            let num: f64 = aps_in.iter().map(|&m| vec_norm_sqr(eff.row(i, m))).sum();
            let den: f64 = if aps_out.is_empty() {
                1.0
            } else {
                aps_out.iter().map(|&m| vec_norm_sqr(eff.row(i, m))).sum()
            };
            let metric = if den > 0.0 {
                num / den
            } else if num > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            (i, metric)
        })
        .collect();
    ues.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ues.into_iter().map(|(i, _)| i).collect()
}

/// `|row · w|²` with real `w`.
pub fn beam_power(row: &[C64], w: &[f64]) -> f64 {
    row.iter().zip(w).map(|(h, x)| h * x).sum::<C64>().norm_sqr()
}

/// Inter-subnetwork interference at UE `i` (cluster `n`), with the
/// `(D_U[n]/D_U[l])²` weight.
pub fn isni(i: usize, cfg: &ClusterConfig, eff: &EffectiveChannels, digital: &DigitalBeams) -> f64 {
    let n = cfg.ue_cluster()[i];
    let du = cfg.ue_sizes();
    let mut total = 0.0;
    for (m, &l) in cfg.ap_cluster().iter().enumerate() {
        if l == n {
            continue;
        }
        let weight = (du[n] as f64 / du[l] as f64).powi(2);
        let row = eff.row(i, m);
        total += weight * digital.w[m].iter().map(|w| beam_power(row, w)).sum::<f64>();
    }
    total
}

fn local_position(cfg: &ClusterConfig, k: usize) -> usize {
    let n = cfg.ue_cluster()[k];
    cfg.ue_cluster()[..k].iter().filter(|&&c| c == n).count()
}

fn sinr_with(
    i: usize,
    cfg: &ClusterConfig,
    eff: &EffectiveChannels,
    digital: &DigitalBeams,
    interferers: &[usize],
) -> f64 {
    let n = cfg.ue_cluster()[i];
    let qi = local_position(cfg, i);
    let mut num = 0.0;
    let mut iui = 0.0;
    for m in cfg.aps_of(n) {
        let row = eff.row(i, m);
        num += beam_power(row, &digital.w[m][qi]);
        for &k in interferers {
            iui += beam_power(row, &digital.w[m][local_position(cfg, k)]);
        }
    }
    if num == 0.0 {
        return 0.0;
    }
    let den = iui + isni(i, cfg, eff, digital) + eff.noise[i];
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// SINR after SIC: UE `i` still sees the UEs after it in `order`.
pub fn sinr_post_sic(i: usize, order: &[usize], cfg: &ClusterConfig, eff: &EffectiveChannels, digital: &DigitalBeams) -> f64 {
    let p = order.iter().position(|&k| k == i).expect("UE in cluster order");
    sinr_with(i, cfg, eff, digital, &order[p + 1..])
}

/// SINR without SIC: every other in-cluster UE interferes.
pub fn sinr_pre_sic(i: usize, cfg: &ClusterConfig, eff: &EffectiveChannels, digital: &DigitalBeams) -> f64 {
    let n = cfg.ue_cluster()[i];
    let others: Vec<usize> = cfg.ues_of(n).into_iter().filter(|&k| k != i).collect();
    sinr_with(i, cfg, eff, digital, &others)
}

/// Per-UE `log2(1 + γ)` and their sum.
pub fn sum_rate(sinr: &[f64]) -> (Vec<f64>, f64) {
    let rates: Vec<f64> = sinr.iter().map(|g| (1.0 + g).log2()).collect();
    let total = rates.iter().sum();
    (rates, total)
}

#[cfg(test)]
mod tests;
