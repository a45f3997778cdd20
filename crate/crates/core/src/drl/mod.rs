//! Agents, networks and environments for the clustering and beamsteering
//! levels.

pub mod agents;
pub mod envs;
pub mod flops;
pub mod mlp;
pub mod normalize;
pub mod optim;
pub mod replay;
pub mod serialize;

pub use agents::{make_agent, Action, ActionSpace, Agent, Algorithm, Hyper, Losses, Transition};
pub use envs::{
    phases_from_action, BeamEnv, BeamOutcome, ClusterOutcome, ClusteringEnv, ClusteringEnvOptions, CsiMode, InnerBeams,
};
pub use flops::{flops_estimate, flops_table_form, FlopsReport};
pub use serialize::{load_agent, save_agent};
