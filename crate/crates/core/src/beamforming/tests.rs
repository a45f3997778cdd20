use super::*;
use crate::channel::NetworkConfig;
use crate::linalg::{project_matrix, project_vector};
use crate::par::Execution;
use approx::assert_relative_eq;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_phases(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len).map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect()
}

fn to_na(a: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)])
}

fn net(aps: usize, ues: usize, clusters: usize, ap_grid: (usize, usize), ue_grid: (usize, usize)) -> NetworkConfig {
    NetworkConfig {
        aps,
        ues,
        subnetworks: clusters,
        ap_grid,
        ue_grid,
        ..NetworkConfig::default()
    }
}

fn random_channels(rng: &mut ChaCha8Rng, aps: usize, ues: usize, u: usize, a: usize) -> ChannelSet {
    let mats = (0..aps * ues).map(|_| random_matrix(rng, u, a)).collect();
    ChannelSet::from_matrices(aps, ues, mats).unwrap()
}

fn random_steering(rng: &mut ChaCha8Rng, cfg: &ClusterConfig, a: usize, u: usize) -> Steering {
    let mut s = Steering::all_ones(cfg, a, u);
    for m in s.ap.iter_mut() {
        let (r, c) = m.shape();
        let ph = random_phases(rng, r * c);
        *m = ComplexMatrix::from_row_major(r, c, ph).unwrap();
    }
    for d in s.ue.iter_mut() {
        *d = random_phases(rng, d.len());
    }
    s
}

fn random_digital(rng: &mut ChaCha8Rng, cfg: &ClusterConfig) -> DigitalBeams {
    let mut d = DigitalBeams::zeros(cfg);
    for col in d.w.iter_mut().flatten() {
        for x in col.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.iter_mut().for_each(|x| *x /= n.max(1.0));
    }
    d
}

#[test]
fn effective_channel_scalar_and_zero() {
    let h = ComplexMatrix::from_row_major(1, 1, vec![C64::new(0.3, -0.7)]).unwrap();
    let a = ComplexMatrix::from_row_major(1, 1, vec![C64::new(1.0, 0.0)]).unwrap();
    let e = effective_channel(&[C64::new(1.0, 0.0)], &h, &a).unwrap();
    assert_eq!(e, vec![C64::new(0.3, -0.7)]);
    let z = ComplexMatrix::zeros(2, 4);
    let a = ComplexMatrix::from_fn(4, 2, |_, _| C64::new(1.0, 0.0));
    let e = effective_channel(&[C64::new(1.0, 0.0); 2], &z, &a).unwrap();
    assert!(e.iter().all(|x| *x == C64::new(0.0, 0.0)));
}

#[test]
fn effective_channel_matches_triple_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = random_matrix(&mut rng, 2, 4);
    let a = random_matrix(&mut rng, 4, 3);
    let delta = random_phases(&mut rng, 2);
    let e = effective_channel(&delta, &h, &a).unwrap();
    let d = DMatrix::from_row_slice(1, 2, &delta);
    let oracle = d * to_na(&h) * to_na(&a);
    for (q, x) in e.iter().enumerate() {
        assert!((x - oracle[(0, q)]).norm() < 1e-12);
    }
}

#[test]
fn effective_channel_rejects_mismatch() {
    let h = ComplexMatrix::zeros(2, 4);
    let a = ComplexMatrix::zeros(3, 2);
    assert!(effective_channel(&[C64::new(1.0, 0.0); 2], &h, &a).is_err());
}

/// `‖δᵀU1U1*·H·V1V1*·A‖²` assembled from explicit factors.
fn projection_oracle(delta: &[C64], h: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    let f = svd(h).unwrap();
    let nb = null_bases(&f);
    let d = project_vector(delta, &nb.u1).unwrap();
    let ap = project_matrix(a, &nb.v1).unwrap();
    let row = h.left_mul_row(&d).unwrap();
    vec_norm_sqr(&ap.left_mul_row(&row).unwrap())
}

/// `‖δ‖²·‖H‖_F²·‖V0V0*·A‖²_F` from an independent nalgebra SVD.
fn null_oracle(delta: &[C64], h: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    let svd = to_na(h).svd(true, true);
    let v_t = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1e-300);
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let cols = h.cols();
    let na = to_na(a);
    // thin SVD: null projector as I - V1V1*
    let v1 = v_t.rows(0, rank).adjoint();
    let p = DMatrix::<C64>::identity(cols, cols) - &v1 * v1.adjoint();
    let g = p * na;
    vec_norm_sqr(delta) * to_na(h).norm_squared() * g.norm_squared()
}

#[test]
fn steering_objective_single_link_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_phases(&mut rng, 2);
    let y = random_phases(&mut rng, 2);
    // rank one so both range and null sides are nontrivial
    let h = ComplexMatrix::outer_conj(&x, &y);
    let channels = ChannelSet::from_matrices(1, 1, vec![h.clone()]).unwrap();
    let kernels = ChannelKernels::new(&channels).unwrap();
    let cfg = ClusterConfig::new(1, vec![0], vec![0]).unwrap();
    let s = random_steering(&mut rng, &cfg, 2, 2);
    let prev = vec![vec![C64::new(1.0, 0.0); 2]];
    let got = beamsteer_objective(0, &cfg, &kernels, &s, &prev);
    let want = projection_oracle(&s.ue[0], &h, &s.ap[0]);
    assert_relative_eq!(got, want, max_relative = 1e-10);
    assert!(got > 0.0);
}

#[test]
fn steering_objective_two_cluster_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let channels = {
        let mats = (0..4)
            .map(|_| {
                let x = random_phases(&mut rng, 2);
                let y = random_phases(&mut rng, 3);
                ComplexMatrix::outer_conj(&x, &y)
            })
            .collect();
        ChannelSet::from_matrices(2, 2, mats).unwrap()
    };
    let kernels = ChannelKernels::new(&channels).unwrap();
    let cfg = ClusterConfig::new(2, vec![0, 1], vec![1, 0]).unwrap();
    let s = random_steering(&mut rng, &cfg, 3, 2);
    let prev: Vec<Vec<C64>> = (0..2).map(|_| random_phases(&mut rng, 2)).collect();
    for n in 0..2 {
        let mut want = 0.0;
        for m in cfg.aps_of(n) {
            for k in 0..2 {
                want += if cfg.ue_cluster()[k] == n {
                    projection_oracle(&s.ue[k], channels.h(k, m), &s.ap[m])
                } else {
                    null_oracle(&prev[k], channels.h(k, m), &s.ap[m])
                };
            }
        }
        let got = beamsteer_objective(n, &cfg, &kernels, &s, &prev);
        assert_relative_eq!(got, want, max_relative = 1e-10, epsilon = 1e-14);
    }
}

#[test]
fn steering_objective_zero_channel() {
    let channels = ChannelSet::from_matrices(1, 1, vec![ComplexMatrix::zeros(2, 2)]).unwrap();
    let kernels = ChannelKernels::new(&channels).unwrap();
    let cfg = ClusterConfig::new(1, vec![0], vec![0]).unwrap();
    let s = Steering::all_ones(&cfg, 2, 2);
    let prev = s.ue.clone();
    assert_eq!(beamsteer_objective(0, &cfg, &kernels, &s, &prev), 0.0);
}

#[test]
fn steering_objective_below_bound_and_search_improves() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let channels = random_channels(&mut rng, 2, 3, 2, 4);
    let kernels = ChannelKernels::new(&channels).unwrap();
    let cfg = ClusterConfig::new(2, vec![0, 1], vec![0, 1, 1]).unwrap();
    let mut s = Steering::all_ones(&cfg, 4, 2);
    let prev = s.ue.clone();
    for n in 0..2 {
        let before = beamsteer_objective(n, &cfg, &kernels, &s, &prev);
        let after = optimize_steering(n, &cfg, &kernels, &mut s, &prev, &SteeringSearch::default());
        assert!(after >= before);
        assert_relative_eq!(after, beamsteer_objective(n, &cfg, &kernels, &s, &prev), max_relative = 1e-12);
        assert!(after <= beamsteer_bound(n, &cfg, &kernels, 4, 2) * (1.0 + 1e-12));
    }
    s.validate(&cfg, 4, 2).unwrap();
}

fn eff_from_gains(gains: &[f64], aps: usize) -> EffectiveChannels {
    // one-entry rows with |row|² equal to the given gain, indexed i*M+m
    EffectiveChannels {
        aps,
        rows: gains.iter().map(|g| vec![C64::new(g.sqrt(), 0.0)]).collect(),
        noise: vec![1.0; gains.len() / aps],
    }
}

#[test]
fn ordering_by_metric_and_index() {
    let cfg = ClusterConfig::new(1, vec![0], vec![0, 0]).unwrap();
    assert_eq!(order_ues(0, &cfg, &eff_from_gains(&[2.0, 0.5], 1)), vec![1, 0]);
    assert_eq!(order_ues(0, &cfg, &eff_from_gains(&[0.5, 2.0], 1)), vec![0, 1]);
    assert_eq!(order_ues(0, &cfg, &eff_from_gains(&[1.0, 1.0], 1)), vec![0, 1]);
}

#[test]
fn ordering_matches_recomputed_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let channels = random_channels(&mut rng, 3, 4, 2, 2);
    let cfg = ClusterConfig::new(2, vec![0, 0, 1], vec![0, 0, 1, 0]).unwrap();
    let netc = net(3, 4, 2, (2, 1), (2, 1));
    let s = random_steering(&mut rng, &cfg, 2, 2);
    let eff = effective_channels(&netc, &cfg, &channels, &s).unwrap();
    let mut oracle: Vec<(f64, usize)> = vec![0, 1, 3]
        .into_iter()
        .map(|i| {
            let row = |m: usize| effective_channel(&s.ue[i], channels.h(i, m), &s.ap[m]).unwrap();
            let num = vec_norm_sqr(&row(0)) + vec_norm_sqr(&row(1));
            (num / vec_norm_sqr(&row(2)), i)
        })
        .collect();
    oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let want: Vec<usize> = oracle.into_iter().map(|x| x.1).collect();
    assert_eq!(order_ues(0, &cfg, &eff), want);
    assert_eq!(order_ues(1, &cfg, &eff), vec![2]);
}

/// Post-SIC SINR recomputed straight from H, A, δ and W.
fn sinr_oracle(
    i: usize,
    order: &[usize],
    netc: &NetworkConfig,
    cfg: &ClusterConfig,
    ch: &ChannelSet,
    s: &Steering,
    w: &DigitalBeams,
    sic: bool,
) -> f64 {
    let n = cfg.ue_cluster()[i];
    let du = cfg.ue_sizes();
    let member = |k: usize| cfg.ues_of(cfg.ue_cluster()[k]).iter().position(|&x| x == k).unwrap();
    let gain = |k_ue: usize, m: usize, col: &[f64]| -> f64 {
        let d = DMatrix::from_row_slice(1, s.ue[k_ue].len(), &s.ue[k_ue]);
        let wv = DMatrix::from_iterator(col.len(), 1, col.iter().map(|&x| C64::new(x, 0.0)));
        (d * to_na(ch.h(k_ue, m)) * to_na(&s.ap[m]) * wv)[(0, 0)].norm_sqr()
    };
    let after: Vec<usize> = if sic {
        order[order.iter().position(|&k| k == i).unwrap() + 1..].to_vec()
    } else {
        cfg.ues_of(n).into_iter().filter(|&k| k != i).collect()
    };
    let mut num = 0.0;
    let mut iui = 0.0;
    let mut isn = 0.0;
    for m in 0..ch.aps {
        let l = cfg.ap_cluster()[m];
        if l == n {
            num += gain(i, m, &w.w[m][member(i)]);
            for &k in &after {
                iui += gain(i, m, &w.w[m][member(k)]);
            }
        } else {
            let wt = (du[n] as f64 / du[l] as f64).powi(2);
            for col in &w.w[m] {
                isn += wt * gain(i, m, col);
            }
        }
    }
    let sig = netc.noise_power_w() * du[n] as f64 / (2.0 * netc.tx_power_w());
    let noise = sig * sig * s.ue[i].len() as f64;
    num / (iui + isn + noise)
}

fn two_by_two_instance(seed: u64) -> (NetworkConfig, ClusterConfig, ChannelSet, Steering, DigitalBeams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let netc = net(3, 4, 2, (2, 1), (2, 1));
    let cfg = ClusterConfig::new(2, vec![0, 1, 0], vec![1, 0, 0, 1]).unwrap();
    let ch = random_channels(&mut rng, 3, 4, 2, 2);
    let s = random_steering(&mut rng, &cfg, 2, 2);
    let w = random_digital(&mut rng, &cfg);
    (netc, cfg, ch, s, w)
}

#[test]
fn sinr_matches_direct_formula() {
    for seed in 0..5 {
        let (netc, cfg, ch, s, w) = two_by_two_instance(seed);
        let eff = effective_channels(&netc, &cfg, &ch, &s).unwrap();
        for n in 0..2 {
            let order = order_ues(n, &cfg, &eff);
            for &i in &order {
                let got = sinr_post_sic(i, &order, &cfg, &eff, &w);
                let want = sinr_oracle(i, &order, &netc, &cfg, &ch, &s, &w, true);
                assert_relative_eq!(got, want, max_relative = 1e-9);
                let pre = sinr_pre_sic(i, &cfg, &eff, &w);
                let want_pre = sinr_oracle(i, &order, &netc, &cfg, &ch, &s, &w, false);
                assert_relative_eq!(pre, want_pre, max_relative = 1e-9);
                assert!(got >= pre);
            }
        }
    }
}

#[test]
fn sinr_single_ue_reduces_to_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let netc = net(1, 1, 1, (2, 1), (1, 1));
    let cfg = ClusterConfig::new(1, vec![0], vec![0]).unwrap();
    let ch = random_channels(&mut rng, 1, 1, 1, 2);
    let s = Steering::all_ones(&cfg, 2, 1);
    let w = DigitalBeams::uniform(&cfg);
    let eff = effective_channels(&netc, &cfg, &ch, &s).unwrap();
    let post = sinr_post_sic(0, &[0], &cfg, &eff, &w);
    let pre = sinr_pre_sic(0, &cfg, &eff, &w);
    let want = beam_power(eff.row(0, 0), &w.w[0][0]) / eff.noise[0];
    assert_relative_eq!(post, want, max_relative = 1e-12);
    assert_eq!(post, pre);
}

#[test]
fn sinr_zero_desired_power() {
    let (netc, cfg, ch, s, mut w) = two_by_two_instance(1);
    let eff = effective_channels(&netc, &cfg, &ch, &s).unwrap();
    // UE 1 is the first member of cluster 0; silence its column everywhere
    for m in cfg.aps_of(0) {
        w.w[m][0] = vec![0.0; 2];
    }
    let order = order_ues(0, &cfg, &eff);
    assert_eq!(sinr_post_sic(1, &order, &cfg, &eff, &w), 0.0);
}

#[test]
fn sum_rate_cases() {
    assert_eq!(sum_rate(&[0.0, 0.0]).1, 0.0);
    assert_eq!(sum_rate(&[1.0]).1, 1.0);
    let g = [0.5, 3.0, 7.0];
    let (rates, total) = sum_rate(&g);
    let oracle: f64 = g.iter().map(|x: &f64| (1.0 + x).ln() / std::f64::consts::LN_2).sum();
    assert_relative_eq!(total, oracle, max_relative = 1e-14);
    assert_relative_eq!(rates.iter().sum::<f64>(), total, max_relative = 1e-14);
}

#[test]
fn rate_monotone_in_desired_power() {
    let (netc, cfg, ch, s, w) = two_by_two_instance(2);
    let eff = effective_channels(&netc, &cfg, &ch, &s).unwrap();
    let order = order_ues(0, &cfg, &eff);
    let i = order[0];
    let q = cfg.ues_of(0).iter().position(|&k| k == i).unwrap();
    let mut louder = w.clone();
    for m in cfg.aps_of(0) {
        let c = &mut louder.w[m][q];
        let nrm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= nrm);
    }
    let before = sinr_post_sic(i, &order, &cfg, &eff, &w);
    let after = sinr_post_sic(i, &order, &cfg, &eff, &louder);
    assert!(after >= before);
    assert!(sum_rate(&[after]).1 >= sum_rate(&[before]).1);
}

fn unit_problem(rng: &mut ChaCha8Rng, ues: usize, aps: usize, floor: f64) -> P3Problem {
    let rows = (0..ues)
        .map(|_| {
            (0..aps)
                .map(|_| (0..ues).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect()
        })
        .collect();
    P3Problem {
        dim: ues,
        rows,
        order: (0..ues).collect(),
        floor: vec![floor; ues],
        eps: 0.0,
    }
}

fn col_norms_ok(w: &ClusterBeams) -> bool {
    w.iter().flatten().all(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1.0 + 1e-9)
}

#[test]
fn solver_single_ue_saturates_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = unit_problem(&mut rng, 1, 1, 0.1);
    let (w, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
    let col = &w[0][0];
    assert_relative_eq!(col.iter().map(|x| x * x).sum::<f64>().sqrt(), 1.0, max_relative = 1e-9);
    let h = &p.rows[0][0];
    // best real unit vector for |h·w|² is w = ±1 when D_U = 1
    let want = (1.0 + h[0].norm_sqr() / 0.1).log2();
    assert_relative_eq!(rep.objective, want, max_relative = 1e-9);
    assert!(rep.kkt_residual <= 1e-6);
}

#[test]
fn solver_single_ue_two_aps_matches_eigen_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut p = unit_problem(&mut rng, 1, 2, 0.2);
    p.dim = 1;
    let (_, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
    let s: f64 = p.rows[0].iter().map(|h| h[0].norm_sqr()).sum();
    assert_relative_eq!(rep.objective, (1.0 + s / 0.2).log2(), max_relative = 1e-9);
}

#[test]
fn solver_identical_ues_beat_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut p = unit_problem(&mut rng, 2, 1, 0.05);
    p.rows[1] = p.rows[0].clone();
    let (w, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
    let uniform: ClusterBeams = vec![vec![vec![1.0 / 2f64.sqrt(); 2]]; 2];
    let base = if margin_violation(&p, &uniform, 0.0) <= 1e-9 { cluster_objective(&p, &uniform) } else { 0.0 };
    assert!(rep.objective >= base - 1e-9);
    assert!(col_norms_ok(&w));
    assert!(margin_violation(&p, &w, 0.0) <= 1e-6);
    assert_relative_eq!(cluster_objective(&p, &w), rep.objective, max_relative = 1e-9);
}

#[test]
fn solver_within_two_percent_of_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let p = unit_problem(&mut rng, 2, 1, 0.1);
    let (w, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
    assert!(margin_violation(&p, &w, 0.0) <= 1e-6);
    let steps: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
    let mut grid_best: f64 = 0.0;
    for &a in &steps {
        for &b in &steps {
            if a * a + b * b > 1.0 + 1e-12 {
                continue;
            }
            for &c in &steps {
                for &d in &steps {
                    if c * c + d * d > 1.0 + 1e-12 {
                        continue;
                    }
                    let cand = vec![vec![vec![a, b]], vec![vec![c, d]]];
                    if margin_violation(&p, &cand, 0.0) <= 0.0 {
                        grid_best = grid_best.max(cluster_objective(&p, &cand));
                    }
                }
            }
        }
    }
    assert!(rep.objective >= 0.98 * grid_best, "solver {} grid {}", rep.objective, grid_best);
}

#[test]
fn solver_beats_random_feasible_segments() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let p = unit_problem(&mut rng, 2, 2, 0.1);
    let (_, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
    let mut checked = 0;
    while checked < 20 {
        let mut pick = || -> ClusterBeams {
            (0..2)
                .map(|_| {
                    (0..2)
                        .map(|_| {
                            let v: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
                            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
                            v.into_iter().map(|x| x / n).collect()
                        })
                        .collect()
                })
                .collect()
        };
        let (x, y) = (pick(), pick());
        if margin_violation(&p, &x, 0.0) > 0.0 || margin_violation(&p, &y, 0.0) > 0.0 {
            continue;
        }
        checked += 1;
        assert!(rep.objective >= cluster_objective(&p, &x) - 1e-9);
        assert!(rep.objective >= cluster_objective(&p, &y) - 1e-9);
    }
}

#[test]
fn solver_relaxes_unreachable_margin() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut p = unit_problem(&mut rng, 2, 1, 0.1);
    p.eps = 1e6;
    let (w, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
    assert!(rep.relaxed);
    assert_eq!(rep.eps_used, 0.0);
    assert!(margin_violation(&p, &w, 0.0) <= 1e-6);
}

#[test]
fn solver_rejects_bad_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let mut p = unit_problem(&mut rng, 2, 1, 0.1);
    p.order = vec![0, 0];
    assert!(solve_digital_beamforming(&p, &SolverOptions::default()).is_err());
    let mut p = unit_problem(&mut rng, 2, 1, 0.1);
    p.rows[0][0][0] = C64::new(f64::NAN, 0.0);
    assert!(solve_digital_beamforming(&p, &SolverOptions::default()).is_err());
}

#[test]
fn pipeline_deterministic_and_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let netc = net(3, 3, 2, (2, 1), (2, 1));
    let cfg = ClusterConfig::new(2, vec![0, 1, 1], vec![0, 1, 0]).unwrap();
    let ch = random_channels(&mut rng, 3, 3, 2, 2);
    let kernels = ChannelKernels::new(&ch).unwrap();
    let prev = vec![vec![C64::new(1.0, 0.0); 2]; 3];
    let run = |mode: BeamMode, exec: Execution| {
        let opts = PipelineOptions { mode, exec, ..PipelineOptions::default() };
        run_pipeline(&netc, &cfg, &ch, &kernels, &prev, &opts).unwrap()
    };
    let a = run(BeamMode::Conventional, Execution::Sequential);
    let b = run(BeamMode::Conventional, Execution::Parallel);
    assert_eq!(a.sum_rate, b.sum_rate);
    assert_eq!(a.digital, b.digital);
    assert!(a.digital.max_column_norm() <= 1.0 + 1e-9);
    let o = run(BeamMode::Optimized(SteeringSearch::default()), Execution::Parallel);
    for n in 0..2 {
        assert!(o.steering_objective[n] >= a.steering_objective[n]);
    }
    assert!(o.sinr.iter().all(|g| g.is_finite() && *g >= 0.0));
    let g = run(BeamMode::Given(o.steering.clone()), Execution::Sequential);
    assert_eq!(g.sum_rate, o.sum_rate);
    assert_relative_eq!(a.cluster_rates.iter().sum::<f64>(), a.sum_rate, max_relative = 1e-12);
}

#[test]
fn pipeline_rejects_bad_steering() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let netc = net(2, 2, 1, (2, 1), (2, 1));
    let cfg = ClusterConfig::new(1, vec![0, 0], vec![0, 0]).unwrap();
    let ch = random_channels(&mut rng, 2, 2, 2, 2);
    let kernels = ChannelKernels::new(&ch).unwrap();
    let prev = vec![vec![C64::new(1.0, 0.0); 2]; 2];
    let mut s = Steering::all_ones(&cfg, 2, 2);
    s.ue[0][1] = C64::new(0.5, 0.0);
    let opts = PipelineOptions { mode: BeamMode::Given(s), ..PipelineOptions::default() };
    assert!(run_pipeline(&netc, &cfg, &ch, &kernels, &prev, &opts).is_err());
}

mod invariants {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solver_output_is_feasible(seed in any::<u64>(), ues in 1usize..4, aps in 1usize..3, floor in 0.01f64..1.0, eps_frac in 0.0f64..0.05) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = unit_problem(&mut rng, ues, aps, floor);
            p.eps = eps_frac;
            let (w, rep) = solve_digital_beamforming(&p, &SolverOptions::default()).unwrap();
            prop_assert!(col_norms_ok(&w));
            prop_assert!(margin_violation(&p, &w, rep.eps_used) <= 1e-6);
            prop_assert!(rep.objective + 1e-9 >= rep.start_objective);
            prop_assert!((cluster_objective(&p, &w) - rep.objective).abs() <= 1e-9 * rep.objective.max(1.0));
        }

        #[test]
        fn steering_objective_within_bound(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = ClusterConfig::new(2, vec![0, 1], vec![0, 1, 1]).unwrap();
            let ch = random_channels(&mut rng, 2, 3, 2, 3);
            let kernels = ChannelKernels::new(&ch).unwrap();
            let s = random_steering(&mut rng, &cfg, 3, 2);
            let prev: Vec<Vec<C64>> = (0..3).map(|_| random_phases(&mut rng, 2)).collect();
            for n in 0..2 {
                let obj = beamsteer_objective(n, &cfg, &kernels, &s, &prev);
                prop_assert!(obj >= 0.0);
                prop_assert!(obj <= beamsteer_bound(n, &cfg, &kernels, 3, 2) * (1.0 + 1e-9));
            }
        }
    }
}
