//! Analog steering by coordinate ascent of the secrecy sum power gain over a
//! uniform phase grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{beamsteer_objective, ChannelKernels, Steering};
use crate::linalg::{ComplexMatrix, C64};
use crate::partitioning::ClusterConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringSearch {
    /// Phase levels per entry, `2π·q/levels`.
    pub levels: usize,
    /// Full passes over every steering and combiner entry.
    pub sweeps: usize,
    /// Start every AP steering matrix from DFT columns instead of all ones.
    pub dft_start: bool,
}

impl Default for SteeringSearch {
    fn default() -> Self {
        Self {
            levels: 16,
            sweeps: 3,
            dft_start: true,
        }
    }
}

/// `A(q, z) = exp(j·2π·q·z/a)`
pub fn dft_steering(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |q, z| C64::from_polar(1.0, 2.0 * PI * (q * z) as f64 / rows as f64))
}

/// Improves the steering of cluster `n` in place, one entry at a time, and
/// returns the final objective. Entries outside the cluster are untouched.
pub fn optimize_steering(
    n: usize,
    cfg: &ClusterConfig,
    kernels: &ChannelKernels,
    steering: &mut Steering,
    prev_combiners: &[Vec<C64>],
    search: &SteeringSearch,
) -> f64 {
    let levels: Vec<C64> = (0..search.levels.max(1))
        .map(|q| C64::from_polar(1.0, 2.0 * PI * q as f64 / search.levels.max(1) as f64))
        .collect();
    let aps = cfg.aps_of(n);
    let ues = cfg.ues_of(n);
    let mut best = beamsteer_objective(n, cfg, kernels, steering, prev_combiners);
    for _ in 0..search.sweeps {
        let before = best;
        for &m in &aps {
            let (rows, cols) = steering.ap[m].shape();
            for r in 0..rows {
                for c in 0..cols {
                    let keep = steering.ap[m][(r, c)];
                    let mut choice = keep;
                    for &z in &levels {
                        steering.ap[m][(r, c)] = z;
                        let v = beamsteer_objective(n, cfg, kernels, steering, prev_combiners);
                        if v > best {
                            best = v;
                            choice = z;
                        }
                    }
                    steering.ap[m][(r, c)] = choice;
                }
            }
        }
        for &k in &ues {
            for q in 0..steering.ue[k].len() {
                let keep = steering.ue[k][q];
                let mut choice = keep;
                for &z in &levels {
                    steering.ue[k][q] = z;
                    let v = beamsteer_objective(n, cfg, kernels, steering, prev_combiners);
                    if v > best {
                        best = v;
                        choice = z;
                    }
                }
                steering.ue[k][q] = choice;
            }
        }
        if best <= before {
            break;
        }
    }
    best
}
