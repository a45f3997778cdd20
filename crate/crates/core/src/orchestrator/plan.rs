//! Run plans: one TOML file describing the network, both training levels and
//! the agent hyperparameters.
//!
//! ```toml
//! seed = 7
//! csi = "fixed"             # or "resample"
//!
//! [network]                 # NetworkConfig; cluster_period is τ
//! aps = 5
//! ues = 3
//! subnetworks = 2
//!
//! [clustering]
//! algorithm = "pg"
//! episodes = 2000
//! steps = 10
//! beams = "conventional"    # "optimized" or "drl"
//!
//! [beamsteering]
//! algorithm = "sac"
//! episodes = 1
//! steps = 20
//!
//! [agent]                   # Hyper, minus discount and learning_rate
//! batch_size = 64
//!
//! [solver]
//! max_outer = 30
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamforming::SolverOptions;
use crate::channel::NetworkConfig;
use crate::drl::{Algorithm, CsiMode, Hyper, InnerBeams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringPlan {
    pub algorithm: Algorithm,
    /// E_c
    pub episodes: usize,
    /// T_c
    pub steps: usize,
    pub beams: InnerBeams,
    /// Slots of an inference rollout.
    pub eval_slots: usize,
}

impl Default for ClusteringPlan {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pg,
            episodes: 2000,
            steps: 200,
            beams: InnerBeams::Conventional,
            eval_slots: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamPlan {
    pub algorithm: Algorithm,
    /// E_b
    pub episodes: usize,
    /// T_b
    pub steps: usize,
    /// Configuration and subnetwork trained by `train-beam`.
    pub config: usize,
    pub cluster: usize,
    /// Phase levels per entry of the exhaustive reference grid (0 skips it).
    pub grid_levels: usize,
}

impl Default for BeamPlan {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sac,
            episodes: 1,
            steps: 200,
            config: 0,
            cluster: 0,
            grid_levels: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunPlan {
    pub seed: u64,
    pub csi: CsiMode,
    pub network: NetworkConfig,
    pub clustering: ClusteringPlan,
    pub beamsteering: BeamPlan,
    /// Hyperparameter overrides, see [`Hyper`].
    pub agent: toml::Table,
    pub solver: SolverOptions,
}

impl Default for RunPlan {
    fn default() -> Self {
        Self {
            seed: 1,
            csi: CsiMode::Fixed,
            network: NetworkConfig::default(),
            clustering: ClusteringPlan::default(),
            beamsteering: BeamPlan::default(),
            agent: toml::Table::new(),
            solver: SolverOptions::default(),
        }
    }
}

impl RunPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: RunPlan = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        let c = &self.clustering;
        let b = &self.beamsteering;
        if c.episodes == 0 || c.steps == 0 || b.episodes == 0 || b.steps == 0 {
            return Err(Error::InvalidConfig("episode and step counts must be at least 1".into()));
        }
        if !c.algorithm.supports_discrete() {
            return Err(Error::InvalidConfig(format!("{} cannot drive the discrete clustering agent", c.algorithm)));
        }
        if !b.algorithm.supports_continuous() {
            return Err(Error::InvalidConfig(format!("{} cannot drive the continuous beamsteering agent", b.algorithm)));
        }
        if b.cluster >= self.network.subnetworks {
            return Err(Error::InvalidConfig(format!(
                "beamsteering cluster {} but only {} subnetworks",
                b.cluster, self.network.subnetworks
            )));
        }
        self.hyper(1)?;
        Ok(())
    }

    /// Hyperparameters for a run of `total_steps` agent steps: ζ and α from
    /// the network section, the ε decay over the first half of training
    /// unless set explicitly.
    pub fn hyper(&self, total_steps: usize) -> Result<Hyper> {
        let mut table = self.agent.clone();
        for key in ["discount", "learning_rate"] {
            if table.contains_key(key) {
                return Err(Error::InvalidConfig(format!("set {key} in [network], not [agent]")));
            }
        }
        table.insert("discount".into(), self.network.discount.into());
        table.insert("learning_rate".into(), self.network.learning_rate.into());
        if !table.contains_key("epsilon_decay_steps") {
            table.insert("epsilon_decay_steps".into(), ((total_steps / 2).max(1) as i64).into());
        }
        let hyper: Hyper = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(format!("[agent]: {}", e.message())))?;
        hyper.validate()?;
        Ok(hyper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plan_is_default() {
        assert_eq!(RunPlan::from_toml("").unwrap(), RunPlan::default());
    }

    #[test]
    fn round_trip() {
        let mut plan = RunPlan::default();
        plan.seed = 99;
        plan.csi = CsiMode::Resample;
        plan.clustering.beams = InnerBeams::Drl;
        plan.agent.insert("batch_size".into(), 16i64.into());
        let text = plan.to_toml().unwrap();
        assert_eq!(RunPlan::from_toml(&text).unwrap(), plan);
    }

    #[test]
    fn hyper_takes_network_rates_and_half_horizon() {
        let plan = RunPlan::from_toml("[network]\ndiscount = 0.2\nlearning_rate = 0.01\n[agent]\nbatch_size = 8\n").unwrap();
        let h = plan.hyper(1000).unwrap();
        assert_eq!((h.discount, h.learning_rate, h.batch_size, h.epsilon_decay_steps), (0.2, 0.01, 8, 500));
        let plan = RunPlan::from_toml("[agent]\nepsilon_decay_steps = 3\n").unwrap();
        assert_eq!(plan.hyper(1000).unwrap().epsilon_decay_steps, 3);
    }

    #[test]
    fn rejects_bad_plans() {
        for text in [
            "[agent]\ndiscount = 0.5\n",
            "[agent]\nbogus = 1\n",
            "[clustering]\nalgorithm = \"sac\"\n",
            "[beamsteering]\nalgorithm = \"ddqn\"\n",
            "[clustering]\nepisodes = 0\n",
            "[network]\nsubnetworks = 9\n",
            "nonsense = true\n",
            "seed = \"x\"\n",
            "[beamsteering]\ncluster = 5\n",
        ] {
            assert!(RunPlan::from_toml(text).is_err(), "{text}");
        }
    }
}
