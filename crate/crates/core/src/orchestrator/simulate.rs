use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::plan::RunPlan;
use crate::beamforming::{run_pipeline, BeamMode, ChannelKernels, PipelineOptions, SteeringSearch};
use crate::channel::{sample_channel, sample_geometry};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::par::{derive_seed, map_indexed, Execution};
use crate::partitioning::ClusterConfig;
use crate::report::{fmt_float, CsvRecord};

const SIMULATE_STREAM: u64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub powers_dbm: Vec<f64>,
    pub draws: usize,
    /// Subnetwork counts to sweep; each uses [`balanced_config`].
    pub subnetworks: Vec<usize>,
    pub search: SteeringSearch,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            powers_dbm: vec![20.0, 25.0, 30.0, 35.0, 40.0],
            draws: 100,
            subnetworks: vec![1, 2],
            search: SteeringSearch::default(),
        }
    }
}

/// Paired hybrid and conventional sum rates for one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSample {
    pub subnetworks: usize,
    pub tx_power_dbm: f64,
    pub draw: usize,
    pub hybrid: f64,
    pub conventional: f64,
}

impl CsvRecord for RateSample {
    fn header() -> Vec<&'static str> {
        vec!["subnetworks", "tx_power_dbm", "draw", "hybrid_sum_rate", "conventional_sum_rate"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.subnetworks.to_string(),
            fmt_float(self.tx_power_dbm),
            self.draw.to_string(),
            fmt_float(self.hybrid),
            fmt_float(self.conventional),
        ]
    }
}

/// Contiguous near-equal blocks: AP `m` joins cluster `⌊m·N/M⌋`, UE `k`
/// joins `⌊k·N/K⌋`.
pub fn balanced_config(aps: usize, ues: usize, clusters: usize) -> Result<ClusterConfig> {
    if clusters == 0 || clusters > aps || clusters > ues {
        return Err(Error::InvalidArgument(format!("cannot split {aps} APs and {ues} UEs into {clusters} clusters")));
    }
    ClusterConfig::new(
        clusters,
        (0..aps).map(|m| m * clusters / aps).collect(),
        (0..ues).map(|k| k * clusters / ues).collect(),
    )
}

/// Hybrid (optimized steering) against conventional (all-ones steering) sum
/// rate over paired channel draws, for every subnetwork count and transmit
/// power. Draws run in parallel; the result order is fixed.
pub fn rate_sweep(plan: &RunPlan, sweep: &SweepOptions, exec: Execution) -> Result<Vec<RateSample>> {
    plan.validate()?;
    if sweep.draws == 0 || sweep.powers_dbm.is_empty() || sweep.subnetworks.is_empty() {
        return Err(Error::InvalidArgument("sweep needs draws, powers and subnetwork counts".into()));
    }
    if sweep.powers_dbm.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("transmit power"));
    }
    let mut out = Vec::new();
    for &n in &sweep.subnetworks {
        let mut net = plan.network.clone();
        net.subnetworks = n;
        net.validate().map_err(|e| e.context(format!("{n} subnetworks")))?;
        let cfg = balanced_config(net.aps, net.ues, n)?;
        let per_draw = map_indexed(exec, sweep.draws, |d| -> Result<Vec<RateSample>> {
            let seed = derive_seed(derive_seed(plan.seed, SIMULATE_STREAM + n as u64), d as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let geom = sample_geometry(&net, &mut rng);
            let channels = sample_channel(&geom, &net, 0, &mut rng)?;
            let kernels = ChannelKernels::new(&channels)?;
            let prev = vec![vec![C64::new(1.0, 0.0); net.ue_antennas()]; net.ues];
            let mut rows = Vec::with_capacity(sweep.powers_dbm.len());
            for &p in &sweep.powers_dbm {
                let mut at = net.clone();
                at.tx_power_dbm = p;
                let run = |mode: BeamMode| {
                    let opts = PipelineOptions {
                        mode,
                        solver: plan.solver.clone(),
                        rounds: 2,
                        exec: Execution::Sequential,
                    };
                    run_pipeline(&at, &cfg, &channels, &kernels, &prev, &opts)
                };
                let hybrid = run(BeamMode::Optimized(sweep.search.clone()))?.sum_rate;
                let conventional = run(BeamMode::Conventional)?.sum_rate;
                rows.push(RateSample {
                    subnetworks: n,
                    tx_power_dbm: p,
                    draw: d,
                    hybrid,
                    conventional,
                });
            }
            Ok(rows)
        });
        for (d, rows) in per_draw.into_iter().enumerate() {
            out.extend(rows.map_err(|e| e.context(format!("draw {d}, {n} subnetworks")))?);
        }
    }
    out.sort_by(|a, b| {
        (a.subnetworks, a.draw)
            .cmp(&(b.subnetworks, b.draw))
            .then(a.tx_power_dbm.total_cmp(&b.tx_power_dbm))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_blocks() {
        let c = balanced_config(4, 4, 2).unwrap();
        assert_eq!(c.ap_cluster(), &[0, 0, 1, 1]);
        assert_eq!(c.ue_cluster(), &[0, 0, 1, 1]);
        let c = balanced_config(5, 3, 2).unwrap();
        assert_eq!(c.ap_cluster(), &[0, 0, 0, 1, 1]);
        assert_eq!(c.ue_cluster(), &[0, 0, 1]);
        assert!(balanced_config(2, 4, 3).is_err());
    }

    #[test]
    fn sweep_is_paired_and_deterministic() {
        let mut plan = RunPlan::default();
        plan.network.paths = 1;
        let sweep = SweepOptions {
            powers_dbm: vec![30.0, 35.0],
            draws: 2,
            subnetworks: vec![1],
            ..SweepOptions::default()
        };
        let a = rate_sweep(&plan, &sweep, Execution::Sequential).unwrap();
        let b = rate_sweep(&plan, &sweep, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| r.hybrid.is_finite() && r.conventional >= 0.0));
    }
}
