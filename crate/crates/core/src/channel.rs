//! Network parameters, node geometry and clustered mmWave MIMO channels.
//!
//! Each AP→UE link is a sum of `paths` rank-one UPA outer products with
//! Rician-profiled complex gains, scaled by a free-space-anchored path loss.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Reference distance for the path-loss anchor, meters.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;
const SPEED_OF_LIGHT: f64 = 3.0e8;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// M
    pub aps: usize,
    /// K
    pub ues: usize,
    /// N
    pub subnetworks: usize,
    /// (columns, rows) of the AP array; a = product.
    pub ap_grid: (usize, usize),
    /// (columns, rows) of the UE array; u = product.
    pub ue_grid: (usize, usize),
    pub paths: usize,
    /// LoS-to-NLoS power ratio, linear.
    pub rician_factor: f64,
    /// Element spacing over wavelength.
    pub spacing_ratio: f64,
    pub carrier_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub pathloss_exponent: f64,
    pub radius_m: f64,
    /// SIC power-ordering margin, dBm.
    pub sic_sensitivity_dbm: f64,
    /// Clustering period in slots.
    pub cluster_period: usize,
    pub discount: f64,
    pub learning_rate: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            aps: 4,
            ues: 4,
            subnetworks: 2,
            ap_grid: (2, 2),
            ue_grid: (2, 1),
            paths: 3,
            rician_factor: 4.0,
            spacing_ratio: 0.5,
            carrier_hz: 24.0e9,
            tx_power_dbm: 30.0,
            noise_psd_dbm_hz: -169.0,
            bandwidth_hz: 100.0e6,
            pathloss_exponent: 2.0,
            radius_m: 18.0,
            sic_sensitivity_dbm: 1.0,
            cluster_period: 1,
            discount: 0.01,
            learning_rate: 0.001,
        }
    }
}

impl NetworkConfig {
    pub fn ap_antennas(&self) -> usize {
        self.ap_grid.0 * self.ap_grid.1
    }

    pub fn ue_antennas(&self) -> usize {
        self.ue_grid.0 * self.ue_grid.1
    }

    /// RF chains per AP: the largest admissible subnetwork UE count, K − N + 1.
    pub fn rf_chains(&self) -> usize {
        self.ues + 1 - self.subnetworks
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Noise power over the band, watts.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10())
    }

    pub fn sic_margin_w(&self) -> f64 {
        dbm_to_watts(self.sic_sensitivity_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.subnetworks == 0 || self.subnetworks > self.aps {
            return bad(format!(
                "need 1 <= N <= M, got N = {}, M = {}",
                self.subnetworks, self.aps
            ));
        }
        if self.ues < self.subnetworks {
            return bad(format!("need K >= N, got K = {}, N = {}", self.ues, self.subnetworks));
        }
        if self.ap_grid.0 == 0 || self.ap_grid.1 == 0 || self.ue_grid.0 == 0 || self.ue_grid.1 == 0 {
            return bad("antenna grids must have at least one row and column".into());
        }
        if self.ap_antennas() < self.ue_antennas() {
            return bad(format!(
                "AP antennas must be at least UE antennas, got a = {}, u = {}",
                self.ap_antennas(),
                self.ue_antennas()
            ));
        }
        if self.paths == 0 {
            return bad("at least one propagation path is required".into());
        }
        if !(self.rician_factor > 0.0) {
            return bad(format!("rician factor must be > 0, got {}", self.rician_factor));
        }
        if !(self.carrier_hz > 0.0 && self.bandwidth_hz > 0.0) {
            return bad("carrier and bandwidth must be positive".into());
        }
        if !(self.radius_m >= 0.0) || !(self.spacing_ratio > 0.0) {
            return bad("radius must be >= 0 and spacing ratio > 0".into());
        }
        if self.cluster_period == 0 {
            return bad("cluster period must be >= 1 slot".into());
        }
        if !(0.0..1.0).contains(&self.discount) {
            return bad(format!("discount must lie in [0, 1), got {}", self.discount));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning rate must be > 0, got {}", self.learning_rate));
        }
        let finite = [
            self.tx_power_dbm,
            self.noise_psd_dbm_hz,
            self.pathloss_exponent,
            self.sic_sensitivity_dbm,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("power, noise, path-loss and SIC parameters must be finite".into());
        }
        Ok(())
    }
}

/// UPA response; entry `w * rows + z` is
/// `exp(j·2π·(d/λ)·(w·sin(elev)·cos(azim) + z·sin(azim)))`.
pub fn upa_response(elev: f64, azim: f64, grid: (usize, usize), spacing_ratio: f64) -> Vec<C64> {
    let (cols, rows) = grid;
    let kx = elev.sin() * azim.cos();
    let kz = azim.sin();
    let mut out = Vec::with_capacity(cols * rows);
    for w in 0..cols {
        for z in 0..rows {
            let phase = 2.0 * PI * spacing_ratio * (w as f64 * kx + z as f64 * kz);
            out.push(C64::from_polar(1.0, phase));
        }
    }
    out
}

/// Zero-mean circularly symmetric complex normal with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Path gains with variance κ/(κ+ℒ−1) on the first (LoS) path and 1/(κ+ℒ−1)
/// on each of the rest.
pub fn sample_path_gains<R: Rng + ?Sized>(paths: usize, rician: f64, rng: &mut R) -> Vec<C64> {
    let norm = (1.0 / (rician + paths as f64 - 1.0)).sqrt();
    (0..paths)
        .map(|l| {
            let var = if l == 0 { rician } else { 1.0 };
            complex_normal(rng, var) * norm
        })
        .collect()
}

/// Free-space gain at the reference distance times the distance power law.
pub fn large_scale_gain(distance_m: f64, wavelength_m: f64, exponent: f64) -> f64 {
    let d = distance_m.max(REFERENCE_DISTANCE_M);
    let anchor = wavelength_m / (4.0 * PI * REFERENCE_DISTANCE_M);
    anchor * anchor * (REFERENCE_DISTANCE_M / d).powf(exponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathAngles {
    pub ap_elev: f64,
    pub ap_azim: f64,
    pub ue_elev: f64,
    pub ue_azim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub large_scale_gain: f64,
    pub angles: Vec<PathAngles>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Indexed `k * M + m`.
    pub links: Vec<LinkGeometry>,
}

impl Geometry {
    pub fn link(&self, k: usize, m: usize) -> &LinkGeometry {
        &self.links[k * self.ap_positions.len() + m]
    }
}

fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let t = rng.random_range(-PI..PI);
    [r * t.cos(), r * t.sin()]
}

fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Node positions uniform on the disc. Path 0 follows the horizontal line of
/// sight (elevation π/2, azimuth from the positions, reversed at the UE); the
/// remaining paths draw elevation in [−π/2, π/2] and azimuth in [−π, π].
pub fn sample_geometry<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Geometry {
    let ap_positions: Vec<[f64; 2]> = (0..cfg.aps).map(|_| uniform_in_disc(rng, cfg.radius_m)).collect();
    let ue_positions: Vec<[f64; 2]> = (0..cfg.ues).map(|_| uniform_in_disc(rng, cfg.radius_m)).collect();
    let lambda = cfg.wavelength_m();
    let mut links = Vec::with_capacity(cfg.aps * cfg.ues);
    for ue in &ue_positions {
        for ap in &ap_positions {
            let (dx, dy) = (ue[0] - ap[0], ue[1] - ap[1]);
            let distance_m = (dx * dx + dy * dy).sqrt();
            let azim = dy.atan2(dx);
            let mut angles = Vec::with_capacity(cfg.paths);
            angles.push(PathAngles {
                ap_elev: PI / 2.0,
                ap_azim: azim,
                ue_elev: PI / 2.0,
                ue_azim: wrap_angle(azim + PI),
            });
            for _ in 1..cfg.paths {
                angles.push(PathAngles {
                    ap_elev: rng.random_range(-PI / 2.0..=PI / 2.0),
                    ap_azim: rng.random_range(-PI..=PI),
                    ue_elev: rng.random_range(-PI / 2.0..=PI / 2.0),
                    ue_azim: rng.random_range(-PI..=PI),
                });
            }
            links.push(LinkGeometry {
                distance_m,
                large_scale_gain: large_scale_gain(distance_m, lambda, cfg.pathloss_exponent),
                angles,
            });
        }
    }
    Geometry {
        ap_positions,
        ue_positions,
        links,
    }
}

/// Channel matrices of every link for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub aps: usize,
    pub ues: usize,
    /// u×a matrices indexed `k * M + m`.
    pub matrices: Vec<ComplexMatrix>,
    /// Small-scale path gains used for each link.
    pub path_gains: Vec<Vec<C64>>,
    pub slot: usize,
}

impl ChannelSet {
    pub fn h(&self, k: usize, m: usize) -> &ComplexMatrix {
        &self.matrices[k * self.aps + m]
    }

    pub fn ue_antennas(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn ap_antennas(&self) -> usize {
        self.matrices[0].cols()
    }

    /// Builds a set directly from matrices (test fixtures, replays).
    pub fn from_matrices(aps: usize, ues: usize, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        if matrices.len() != aps * ues || matrices.is_empty() {
            return Err(Error::dims("ChannelSet::from_matrices", aps * ues, matrices.len()));
        }
        let shape = matrices[0].shape();
        if matrices.iter().any(|h| h.shape() != shape) {
            return Err(Error::dims("ChannelSet::from_matrices", format!("{shape:?}"), "mixed shapes"));
        }
        Ok(Self {
            aps,
            ues,
            path_gains: vec![Vec::new(); matrices.len()],
            matrices,
            slot: 0,
        })
    }
}

/// Draws fresh small-scale gains over `geom` and assembles every link matrix.
pub fn sample_channel<R: Rng + ?Sized>(
    geom: &Geometry,
    cfg: &NetworkConfig,
    slot: usize,
    rng: &mut R,
) -> Result<ChannelSet> {
    if geom.ap_positions.len() != cfg.aps || geom.ue_positions.len() != cfg.ues {
        return Err(Error::dims(
            "sample_channel",
            format!("{} APs, {} UEs", cfg.aps, cfg.ues),
            format!("{} APs, {} UEs", geom.ap_positions.len(), geom.ue_positions.len()),
        ));
    }
    let (u, a) = (cfg.ue_antennas(), cfg.ap_antennas());
    let mut matrices = Vec::with_capacity(geom.links.len());
    let mut path_gains = Vec::with_capacity(geom.links.len());
    for link in &geom.links {
        if link.angles.len() != cfg.paths {
            return Err(Error::dims("sample_channel paths", cfg.paths, link.angles.len()));
        }
        let gains = sample_path_gains(cfg.paths, cfg.rician_factor, rng);
        let scale = link.large_scale_gain.sqrt();
        let mut h = ComplexMatrix::zeros(u, a);
        for (g, ang) in gains.iter().zip(&link.angles) {
            let bu = upa_response(ang.ue_elev, ang.ue_azim, cfg.ue_grid, cfg.spacing_ratio);
            let ba = upa_response(ang.ap_elev, ang.ap_azim, cfg.ap_grid, cfg.spacing_ratio);
            let coef = g * scale;
            for r in 0..u {
                for c in 0..a {
                    h[(r, c)] += coef * bu[r] * ba[c].conj();
                }
            }
        }
        matrices.push(h);
        path_gains.push(gains);
    }
    Ok(ChannelSet {
        aps: cfg.aps,
        ues: cfg.ues,
        matrices,
        path_gains,
        slot,
    })
}

/// One row per (link, path) of the channel dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub k: usize,
    pub m: usize,
    pub path: usize,
    pub re: f64,
    pub im: f64,
    pub angles: PathAngles,
    pub large_scale_gain: f64,
}

pub fn path_records(geom: &Geometry, channels: &ChannelSet) -> Vec<PathRecord> {
    let mut out = Vec::new();
    for k in 0..channels.ues {
        for m in 0..channels.aps {
            let link = geom.link(k, m);
            for (path, (g, angles)) in channels.path_gains[k * channels.aps + m]
                .iter()
                .zip(&link.angles)
                .enumerate()
            {
                out.push(PathRecord {
                    k,
                    m,
                    path,
                    re: g.re,
                    im: g.im,
                    angles: *angles,
                    large_scale_gain: link.large_scale_gain,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn upa_broadside_is_all_ones() {
        for grid in [(1, 1), (2, 3), (4, 4)] {
            let b = upa_response(0.0, 0.0, grid, 0.5);
            assert_eq!(b.len(), grid.0 * grid.1);
            assert!(b.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn upa_two_element_endfire() {
        let b = upa_response(PI / 2.0, 0.0, (2, 1), 0.5);
        assert!((b[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((b[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn upa_entries_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let b = upa_response(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), (3, 4), 0.5);
            assert!(b.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn path_gain_variance_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut acc = [0.0f64; 3];
        for _ in 0..n {
            for (a, g) in acc.iter_mut().zip(sample_path_gains(3, 1.0, &mut rng)) {
                *a += g.norm_sqr();
            }
        }
        for a in acc {
            let var = a / n as f64;
            assert!((var - 1.0 / 3.0).abs() < 0.03 / 3.0, "{var}");
        }
        let single: f64 = (0..n).map(|_| sample_path_gains(1, 7.0, &mut rng)[0].norm_sqr()).sum::<f64>() / n as f64;
        assert!((single - 1.0).abs() < 0.03);
    }

    #[test]
    fn degenerate_disc_collapses_to_origin() {
        let cfg = NetworkConfig {
            radius_m: 0.0,
            ..NetworkConfig::default()
        };
        let g = sample_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(g.ap_positions.iter().chain(&g.ue_positions).all(|p| p[0] == 0.0 && p[1] == 0.0));
    }

    #[test]
    fn single_link_shape() {
        let cfg = NetworkConfig {
            aps: 1,
            ues: 1,
            subnetworks: 1,
            ..NetworkConfig::default()
        };
        let g = sample_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(g.links.len(), 1);
        assert_eq!(g.links[0].angles.len(), cfg.paths);
    }

    #[test]
    fn positions_inside_disc() {
        let cfg = NetworkConfig {
            aps: 50,
            ues: 50,
            ..NetworkConfig::default()
        };
        let g = sample_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(8));
        for p in g.ap_positions.iter().chain(&g.ue_positions) {
            assert!((p[0] * p[0] + p[1] * p[1]).sqrt() <= cfg.radius_m + 1e-12);
        }
    }

    #[test]
    fn doubling_distance_quarters_gain() {
        let lambda = 0.0125;
        let g1 = large_scale_gain(5.0, lambda, 2.0);
        let g2 = large_scale_gain(10.0, lambda, 2.0);
        assert!((g1 / g2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_path_channel_is_rank_one() {
        let cfg = NetworkConfig {
            paths: 1,
            ..NetworkConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_geometry(&cfg, &mut rng);
        let ch = sample_channel(&g, &cfg, 0, &mut rng).unwrap();
        for h in &ch.matrices {
            assert_eq!(svd(h).unwrap().rank, 1);
        }
    }

    #[test]
    fn scalar_link_is_sum_of_gains() {
        let cfg = NetworkConfig {
            aps: 1,
            ues: 1,
            subnetworks: 1,
            ap_grid: (2, 1),
            ue_grid: (1, 1),
            ..NetworkConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = sample_geometry(&cfg, &mut rng);
        // force broadside angles so the 2-element AP response is all ones
        for p in g.links[0].angles.iter_mut() {
            *p = PathAngles { ap_elev: 0.0, ap_azim: 0.0, ue_elev: 0.0, ue_azim: 0.0 };
        }
        let ch = sample_channel(&g, &cfg, 0, &mut rng).unwrap();
        let expect: C64 = ch.path_gains[0].iter().sum::<C64>() * g.links[0].large_scale_gain.sqrt();
        assert!((ch.h(0, 0)[(0, 0)] - expect).norm() < 1e-15);
    }

    #[test]
    fn rank_bounded_by_paths_and_deterministic() {
        let cfg = NetworkConfig {
            ue_grid: (2, 2),
            ap_grid: (4, 2),
            paths: 2,
            ..NetworkConfig::default()
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = sample_geometry(&cfg, &mut rng);
            sample_channel(&g, &cfg, 0, &mut rng).unwrap()
        };
        let a = run(17);
        assert_eq!(a, run(17));
        for h in &a.matrices {
            assert!(svd(h).unwrap().rank <= cfg.paths);
        }
    }

    #[test]
    fn noise_power_default() {
        let cfg = NetworkConfig::default();
        // -169 dBm/Hz + 80 dB = -89 dBm
        assert!((cfg.noise_power_w() - 10f64.powf(-11.9)).abs() < 1e-20);
        assert_eq!(cfg.rf_chains(), 3);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let base = NetworkConfig::default();
        let cases = [
            NetworkConfig { subnetworks: 0, ..base.clone() },
            NetworkConfig { subnetworks: 5, ..base.clone() },
            NetworkConfig { ues: 1, ..base.clone() },
            NetworkConfig { ap_grid: (1, 1), ..base.clone() },
            NetworkConfig { paths: 0, ..base.clone() },
            NetworkConfig { rician_factor: 0.0, ..base.clone() },
            NetworkConfig { discount: 1.0, ..base.clone() },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(base.validate().is_ok());
    }
}
