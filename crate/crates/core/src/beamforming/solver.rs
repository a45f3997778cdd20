//! Digital beamforming for one cluster.
//!
//! Variables are the real columns `w_{k,m}` (one per UE `k` and AP `m`). With
//! `P_{i←k} = Σ_m |𝓗_{i,m}·w_{k,m}|²` the objective is
//! `Σ_i log2(S_i + I_i + c_i) − log2(I_i + c_i)` where `S_i = P_{i←i}`, `I_i`
//! sums `P_{i←k}` over the UEs after `i` in SIC order and `c_i` is the frozen
//! inter-cluster interference plus noise.
//!
//! The SIC margins `P_{i←o_d} − Σ_{q=d+1}^{p_i} P_{i←o_q} ≥ ε` are handled by a
//! Powell-Hestenes-Rockafellar augmented Lagrangian; each subproblem is solved
//! by spectral projected gradient ascent over the product of unit balls. The
//! margins are differences of quadratics, so several starts are run and the
//! best feasible point (starts included) is returned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Target for the projected-gradient and complementarity residuals.
    pub tolerance: f64,
    /// Largest accepted margin violation, in units of the largest link gain.
    pub feasibility: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer: 30,
            max_inner: 2000,
            tolerance: 1e-9,
            feasibility: 1e-9,
        }
    }
}

/// One cluster's P3 instance in local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct P3Problem {
    /// D_U: length of every `w` column.
    pub dim: usize,
    /// `rows[i][m]`: effective channel of local UE `i` from local AP `m`.
    pub rows: Vec<Vec<Vec<C64>>>,
    /// Local UE indices in ascending SIC order.
    pub order: Vec<usize>,
    /// `c_i`: interference from other clusters plus noise, per local UE.
    pub floor: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Sum rate of the cluster (bps/Hz) at the returned point.
    pub objective: f64,
    /// Best objective among the feasible starting points.
    pub start_objective: f64,
    /// max(projected Lagrangian gradient, margin violation, complementarity).
    pub kkt_residual: f64,
    /// Largest SIC-margin violation in absolute units.
    pub max_violation: f64,
    pub eps_used: f64,
    /// True when the requested margin was infeasible and ε = 0 was used.
    pub relaxed: bool,
    pub iterations: usize,
}

/// `w[k][m]`: column of local UE `k` at local AP `m`.
pub type ClusterBeams = Vec<Vec<Vec<f64>>>;

struct Model {
    ues: usize,
    aps: usize,
    dim: usize,
    /// (re, im) of each row, scaled by 1/sqrt(scale).
    hr: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
    pos: Vec<usize>,
    order: Vec<usize>,
    floor: Vec<f64>,
    /// constraints as (i, terms (k, coef), eps)
    cons: Vec<Constraint>,
}

struct Constraint {
    ue: usize,
    terms: Vec<(usize, f64)>,
    eps: f64,
    /// UE whose signal the margin protects.
    over: usize,
}

impl Model {
    fn new(p: &P3Problem, eps: f64, scale: f64) -> Self {
        let ues = p.rows.len();
        let aps = p.rows.first().map_or(0, |r| r.len());
        let inv = 1.0 / scale.sqrt();
        let mut hr = Vec::with_capacity(ues * aps);
        let mut hi = Vec::with_capacity(ues * aps);
        for i in 0..ues {
            for m in 0..aps {
                hr.push(p.rows[i][m].iter().map(|z| z.re * inv).collect());
                hi.push(p.rows[i][m].iter().map(|z| z.im * inv).collect());
            }
        }
        let mut pos = vec![0; ues];
        for (q, &k) in p.order.iter().enumerate() {
            pos[k] = q;
        }
        let mut cons = Vec::new();
        for (pi, &i) in p.order.iter().enumerate() {
            for d in 0..pi {
                let mut terms = vec![(p.order[d], 1.0)];
                terms.extend(p.order[d + 1..=pi].iter().map(|&k| (k, -1.0)));
                cons.push(Constraint {
                    ue: i,
                    terms,
                    eps: eps / scale,
                    over: p.order[d],
                });
            }
        }
        let floor = p.floor.iter().map(|c| (c / scale).max(1e-300)).collect();
        Self {
            ues,
            aps,
            dim: p.dim,
            hr,
            hi,
            pos,
            order: p.order.clone(),
            floor,
            cons,
        }
    }

    fn nvars(&self) -> usize {
        self.ues * self.aps * self.dim
    }

    fn block(&self, k: usize, m: usize) -> std::ops::Range<usize> {
        let s = (k * self.aps + m) * self.dim;
        s..s + self.dim
    }

    fn link(&self, i: usize, m: usize) -> (&[f64], &[f64]) {
        (&self.hr[i * self.aps + m], &self.hi[i * self.aps + m])
    }

    /// Projections `(h_r·w_{k,m}, h_i·w_{k,m})` for every (i, k, m).
    fn projections(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.ues * self.ues * self.aps);
        for i in 0..self.ues {
            for k in 0..self.ues {
                for m in 0..self.aps {
                    let w = &x[self.block(k, m)];
                    let (hr, hi) = self.link(i, m);
                    out.push((dot(hr, w), dot(hi, w)));
                }
            }
        }
        out
    }

    fn powers(&self, proj: &[(f64, f64)]) -> Vec<f64> {
        let mut p = vec![0.0; self.ues * self.ues];
        for i in 0..self.ues {
            for k in 0..self.ues {
                p[i * self.ues + k] = (0..self.aps)
                    .map(|m| {
                        let (a, b) = proj[(i * self.ues + k) * self.aps + m];
                        a * a + b * b
                    })
                    .sum();
            }
        }
        p
    }

    fn interference(&self, p: &[f64], i: usize) -> f64 {
        self.order[self.pos[i] + 1..].iter().map(|&k| p[i * self.ues + k]).sum()
    }

    fn objective(&self, p: &[f64]) -> f64 {
        (0..self.ues)
            .map(|i| {
                let s = p[i * self.ues + i];
                if s == 0.0 {
                    return 0.0;
                }
                let ic = self.interference(p, i) + self.floor[i];
                (1.0 + s / ic).log2()
            })
            .sum()
    }

    fn objective_weights(&self, p: &[f64], dp: &mut [f64]) {
        let ln2 = std::f64::consts::LN_2;
        for i in 0..self.ues {
            let s = p[i * self.ues + i];
            let ic = self.interference(p, i) + self.floor[i];
            let total = s + ic;
            dp[i * self.ues + i] += 1.0 / (total * ln2);
            for &k in &self.order[self.pos[i] + 1..] {
                dp[i * self.ues + k] += 1.0 / (total * ln2) - 1.0 / (ic * ln2);
            }
        }
    }

    fn constraints(&self, p: &[f64]) -> Vec<f64> {
        self.cons
            .iter()
            .map(|c| c.terms.iter().map(|&(k, a)| a * p[c.ue * self.ues + k]).sum::<f64>() - c.eps)
            .collect()
    }

    /// Gradient in x from weights on every `P_{i←k}`.
    fn chain(&self, x: &[f64], proj: &[(f64, f64)], dp: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..self.ues {
            for k in 0..self.ues {
                let wgt = dp[i * self.ues + k];
                if wgt == 0.0 {
                    continue;
                }
                for m in 0..self.aps {
                    let (a, b) = proj[(i * self.ues + k) * self.aps + m];
                    let (hr, hi) = self.link(i, m);
                    let r = self.block(k, m);
                    for ((gj, &x1), &x2) in g[r].iter_mut().zip(hr).zip(hi) {
                        *gj += 2.0 * wgt * (a * x1 + b * x2);
                    }
                }
            }
        }
        g
    }

    /// Augmented Lagrangian value and gradient.
    fn lagrangian(&self, x: &[f64], lambda: &[f64], rho: f64) -> (f64, Vec<f64>) {
        let proj = self.projections(x);
        let p = self.powers(&proj);
        let mut value = self.objective(&p);
        let mut dp = vec![0.0; self.ues * self.ues];
        self.objective_weights(&p, &mut dp);
        for ((c, g), &l) in self.cons.iter().zip(self.constraints(&p)).zip(lambda) {
            let shifted = (l - rho * g).max(0.0);
            value -= (shifted * shifted - l * l) / (2.0 * rho);
            if shifted > 0.0 {
                for &(k, a) in &c.terms {
                    dp[c.ue * self.ues + k] += shifted * a;
                }
            }
        }
        (value, self.chain(x, &proj, &dp))
    }

    fn evaluate(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let p = self.powers(&self.projections(x));
        (self.objective(&p), self.constraints(&p))
    }

    fn project(&self, x: &mut [f64]) {
        for c in x.chunks_mut(self.dim) {
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1.0 {
                for v in c.iter_mut() {
                    *v /= n;
                }
            }
        }
    }

    fn pg_residual(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + b).collect();
        self.project(&mut y);
        y.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn kkt(&self, x: &[f64], lambda: &[f64]) -> f64 {
        let proj = self.projections(x);
        let p = self.powers(&proj);
        let mut dp = vec![0.0; self.ues * self.ues];
        self.objective_weights(&p, &mut dp);
        let g = self.constraints(&p);
        let mut worst: f64 = 0.0;
        for ((c, &gj), &l) in self.cons.iter().zip(&g).zip(lambda) {
            for &(k, a) in &c.terms {
                dp[c.ue * self.ues + k] += l * a;
            }
            worst = worst.max((-gj).max(0.0)).max((l * gj).abs());
        }
        let grad = self.chain(x, &proj, &dp);
        worst.max(self.pg_residual(x, &grad))
    }

    /// Least-squares multipliers of the nearly active margins: minimizes the
    /// tangential part of the Lagrangian gradient over λ ≥ 0.
    fn refit_multipliers(&self, x: &[f64]) -> Vec<f64> {
        let proj = self.projections(x);
        let p = self.powers(&proj);
        let g = self.constraints(&p);
        let tangent = |mut v: Vec<f64>| {
            for (vc, xc) in v.chunks_mut(self.dim).zip(x.chunks(self.dim)) {
                let n2 = dot(xc, xc);
                if n2 >= 1.0 - 1e-9 {
                    let c = dot(vc, xc) / n2;
                    for (a, b) in vc.iter_mut().zip(xc) {
                        *a -= c * b;
                    }
                }
            }
            v
        };
        let mut dp = vec![0.0; self.ues * self.ues];
        self.objective_weights(&p, &mut dp);
        let gf = tangent(self.chain(x, &proj, &dp));
        let active: Vec<usize> = (0..self.cons.len()).filter(|&j| g[j] <= 1e-8).collect();
        let gc: Vec<Vec<f64>> = active
            .iter()
            .map(|&j| {
                let c = &self.cons[j];
                let mut dp = vec![0.0; self.ues * self.ues];
                for &(k, a) in &c.terms {
                    dp[c.ue * self.ues + k] += a;
                }
                tangent(self.chain(x, &proj, &dp))
            })
            .collect();
        let n = active.len();
        let gram: Vec<Vec<f64>> = gc.iter().map(|a| gc.iter().map(|b| dot(a, b)).collect()).collect();
        let rhs: Vec<f64> = gc.iter().map(|a| -dot(a, &gf)).collect();
        let mut l = vec![0.0; n];
        for _ in 0..500 {
            for i in 0..n {
                if gram[i][i] <= 0.0 {
                    continue;
                }
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| gram[i][j] * l[j]).sum();
                l[i] = ((rhs[i] - off) / gram[i][i]).max(0.0);
            }
        }
        let mut out = vec![0.0; self.cons.len()];
        for (&j, v) in active.iter().zip(l) {
            out[j] = v;
        }
        out
    }

    /// Spectral projected gradient ascent on the augmented Lagrangian.
    fn inner(&self, x: &mut Vec<f64>, lambda: &[f64], rho: f64, opts: &SolverOptions) -> usize {
        let (mut val, mut grad) = self.lagrangian(x, lambda, rho);
        let mut alpha = 1.0;
        for it in 0..opts.max_inner {
            if self.pg_residual(x, &grad) <= opts.tolerance * 0.1 {
                return it;
            }
            let mut target: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a + alpha * b).collect();
            self.project(&mut target);
            let d: Vec<f64> = target.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if slope <= 0.0 {
                return it;
            }
            let mut t = 1.0;
            let (nx, nval, ngrad) = loop {
                let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let (v, g) = self.lagrangian(&cand, lambda, rho);
                if v >= val + 1e-4 * t * slope || t < 1e-12 {
                    break (cand, v, g);
                }
                t *= 0.5;
            };
            if t < 1e-12 && nval < val {
                return it;
            }
            let s: Vec<f64> = nx.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(ngrad.iter().zip(&grad)).map(|(a, (g1, g0))| a * (g0 - g1)).sum();
            let ss: f64 = s.iter().map(|a| a * a).sum();
            alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e6 };
            *x = nx;
            val = nval;
            grad = ngrad;
        }
        opts.max_inner
    }

    fn augmented(&self, mut x: Vec<f64>, opts: &SolverOptions) -> (Vec<f64>, Vec<f64>, usize) {
        let mut lambda = vec![0.0; self.cons.len()];
        let mut rho = 10.0;
        let mut iters = 0;
        let mut prev_viol = f64::INFINITY;
        for _ in 0..opts.max_outer {
            iters += self.inner(&mut x, &lambda, rho, opts);
            let (_, g) = self.evaluate(&x);
            let viol = g.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
            for (l, gj) in lambda.iter_mut().zip(&g) {
                *l = (*l - rho * gj).max(0.0);
            }
            if self.cons.is_empty() || (viol <= opts.feasibility * 0.1 && self.kkt(&x, &lambda) <= opts.tolerance) {
                break;
            }
            if viol > opts.feasibility * 0.1 && viol > 0.25 * prev_viol {
                rho = (rho * 10.0).min(1e4);
            }
            prev_viol = viol;
        }
        (x, lambda, iters)
    }

    fn unpack(&self, x: &[f64]) -> ClusterBeams {
        (0..self.ues)
            .map(|k| (0..self.aps).map(|m| x[self.block(k, m)].to_vec()).collect())
            .collect()
    }

    fn max_violation(&self, x: &[f64]) -> f64 {
        self.evaluate(x).1.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max)
    }

    /// Scales UEs after the first violated margin by 1/2 until all margins hold.
    fn repair(&self, x: &mut [f64]) -> bool {
        for _ in 0..80 {
            let (_, g) = self.evaluate(x);
            let Some((j, _)) = g.iter().enumerate().filter(|(_, v)| **v < 0.0).min_by(|a, b| a.1.total_cmp(b.1)) else {
                return true;
            };
            let d = self.pos[self.cons[j].over];
            for &k in &self.order[d + 1..] {
                for m in 0..self.aps {
                    for v in &mut x[self.block(k, m)] {
                        *v *= 0.5;
                    }
                }
            }
        }
        false
    }

    fn starts(&self) -> Vec<Vec<f64>> {
        let mut matched = vec![0.0; self.nvars()];
        let mut uniform = vec![0.0; self.nvars()];
        let mut weakest = vec![0.0; self.nvars()];
        let u = 1.0 / (self.dim as f64).sqrt();
        for k in 0..self.ues {
            let scale = 0.5f64.powi(self.pos[k] as i32);
            for m in 0..self.aps {
                let (hr, hi) = self.link(k, m);
                let v = top_eigenvector(hr, hi);
                let r = self.block(k, m);
                for (j, idx) in r.enumerate() {
                    matched[idx] = scale * v[j];
                    uniform[idx] = scale * u;
                    if self.pos[k] == 0 {
                        weakest[idx] = v[j];
                    }
                }
            }
        }
        vec![weakest, matched, uniform]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector maximizing `(a·w)² + (b·w)²`, from the 2×2 Gram matrix of (a, b).
pub(crate) fn top_eigenvector(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (aa, bb, ab) = (dot(a, a), dot(b, b), dot(a, b));
    let half = (aa - bb) / 2.0;
    let lam = (aa + bb) / 2.0 + (half * half + ab * ab).sqrt();
    // eigenvector of the Gram matrix, then mapped back through [a b]
    let (e1, e2) = if ab.abs() > 1e-300 {
        (ab, lam - aa)
    } else if aa >= bb {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let mut v: Vec<f64> = a.iter().zip(b).map(|(x, y)| e1 * x + e2 * y).collect();
    let n = dot(&v, &v).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
        // sign convention: first nonzero entry positive
        if let Some(&f) = v.iter().find(|x| x.abs() > 1e-15) {
            if f < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
    } else {
        v = vec![0.0; a.len()];
        if let Some(x) = v.first_mut() {
            *x = 1.0;
        }
    }
    v
}

/// Solves one cluster's digital beamforming problem.
///
/// When the margin `eps` is unattainable (even full-power beams cannot deliver
/// it) the solve is repeated with `eps = 0`, which always admits `W = 0`.
pub fn solve_digital_beamforming(problem: &P3Problem, opts: &SolverOptions) -> Result<(ClusterBeams, SolveReport)> {
    validate(problem)?;
    match solve_at(problem, problem.eps, opts)? {
        Some(r) => Ok(r),
        None if problem.eps > 0.0 => match solve_at(problem, 0.0, opts)? {
            Some((w, mut rep)) => {
                rep.relaxed = true;
                Ok((w, rep))
            }
            None => Err(infeasible(problem)),
        },
        None => Err(infeasible(problem)),
    }
}

fn infeasible(problem: &P3Problem) -> Error {
    let (i, d) = (problem.order.get(1).copied().unwrap_or(0), problem.order.first().copied().unwrap_or(0));
    Error::Infeasible(format!("SIC margin of UE {i} over UE {d} cannot reach {}", problem.eps))
}

fn validate(p: &P3Problem) -> Result<()> {
    let ues = p.rows.len();
    if ues == 0 || p.dim != ues {
        return Err(Error::dims("P3Problem", format!("{ues} UEs"), format!("dim {}", p.dim)));
    }
    let aps = p.rows[0].len();
    if aps == 0 || p.rows.iter().any(|r| r.len() != aps || r.iter().any(|h| h.len() != p.dim)) {
        return Err(Error::dims("P3Problem rows", format!("{aps} APs × {}", p.dim), "ragged rows"));
    }
    let mut sorted = p.order.clone();
    sorted.sort_unstable();
    if sorted != (0..ues).collect::<Vec<_>>() || p.floor.len() != ues {
        return Err(Error::InvalidArgument("order must permute the cluster's UEs".into()));
    }
    if !(p.eps >= 0.0) || p.floor.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::InvalidArgument("margins and floors must be finite and nonnegative".into()));
    }
    if p.rows.iter().flatten().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("solve_digital_beamforming"));
    }
    Ok(())
}

fn solve_at(p: &P3Problem, eps: f64, opts: &SolverOptions) -> Result<Option<(ClusterBeams, SolveReport)>> {
    let gain = p.rows.iter().flatten().map(|h| h.iter().map(|z| z.norm_sqr()).sum::<f64>()).fold(0.0, f64::max);
    let scale = if gain > 0.0 { gain } else { 1.0 };
    let model = Model::new(p, eps, scale);

    // Certificate: a margin over UE o_d needs Σ_m λmax(Q_{i,m}) ≥ ε.
    if eps > 0.0 {
        for c in &model.cons {
            let cap: f64 = (0..model.aps)
                .map(|m| {
                    let (hr, hi) = model.link(c.ue, m);
                    let v = top_eigenvector(hr, hi);
                    dot(hr, &v).powi(2) + dot(hi, &v).powi(2)
                })
                .sum();
            if cap < c.eps {
                return Ok(None);
            }
        }
    }

    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut start_best = f64::NEG_INFINITY;
    let mut iterations = 0;
    let consider = |x: Vec<f64>, lambda: Vec<f64>, best: &mut Option<(Vec<f64>, Vec<f64>, f64)>| {
        if model.max_violation(&x) > opts.feasibility {
            return;
        }
        let f = model.evaluate(&x).0;
        if best.as_ref().is_none_or(|b| f > b.2) {
            *best = Some((x, lambda, f));
        }
    };
    let zero = vec![0.0; model.cons.len()];
    for mut x in model.starts() {
        let repaired = model.repair(&mut x);
        if repaired {
            start_best = start_best.max(model.evaluate(&x).0);
            consider(x.clone(), zero.clone(), &mut best);
        }
        let (sol, lambda, it) = model.augmented(x, opts);
        iterations += it;
        consider(sol, lambda, &mut best);
    }
    if eps == 0.0 {
        start_best = start_best.max(0.0);
        consider(vec![0.0; model.nvars()], zero.clone(), &mut best);
    }
    let Some((x, mut lambda, f)) = best else {
        return Ok(None);
    };
    let refit = model.refit_multipliers(&x);
    if model.kkt(&x, &refit) < model.kkt(&x, &lambda) {
        lambda = refit;
    }
    let report = SolveReport {
        objective: f,
        start_objective: if start_best.is_finite() { start_best } else { f },
        kkt_residual: model.kkt(&x, &lambda),
        max_violation: model.max_violation(&x) * scale,
        eps_used: eps,
        relaxed: false,
        iterations,
    };
    Ok(Some((model.unpack(&x), report)))
}

/// Cluster sum rate of explicit beams, evaluated directly (test and report helper).
pub fn cluster_objective(p: &P3Problem, w: &ClusterBeams) -> f64 {
    let power = |i: usize, k: usize| -> f64 {
        p.rows[i].iter().zip(&w[k]).map(|(h, col)| crate::beamforming::beam_power(h, col)).sum()
    };
    let mut total = 0.0;
    for (pi, &i) in p.order.iter().enumerate() {
        let s = power(i, i);
        if s == 0.0 {
            continue;
        }
        let ic: f64 = p.order[pi + 1..].iter().map(|&k| power(i, k)).sum::<f64>() + p.floor[i];
        total += (1.0 + s / ic.max(1e-300)).log2();
    }
    total
}

/// Largest SIC-margin violation of explicit beams at margin `eps`.
pub fn margin_violation(p: &P3Problem, w: &ClusterBeams, eps: f64) -> f64 {
    let power = |i: usize, k: usize| -> f64 {
        p.rows[i].iter().zip(&w[k]).map(|(h, col)| crate::beamforming::beam_power(h, col)).sum()
    };
    let mut worst: f64 = 0.0;
    for (pi, &i) in p.order.iter().enumerate() {
        for d in 0..pi {
            let g = power(i, p.order[d]) - p.order[d + 1..=pi].iter().map(|&k| power(i, k)).sum::<f64>() - eps;
            worst = worst.max(-g);
        }
    }
    worst
}
