pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod drl;
pub mod error;
pub mod linalg;
pub mod orchestrator;
pub mod par;
pub mod partitioning;
pub mod report;

pub use error::{Error, Result};
