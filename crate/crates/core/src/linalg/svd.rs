//! Complex SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Column pairs of a working copy `B = A·V` are rotated until mutually orthogonal
//! to working precision; the column norms are then the singular values and the
//! accumulated rotations form the full right unitary `V`. The left factor is
//! `b_j / sigma_j` for the numerically nonzero columns, completed to a full
//! unitary by Gram-Schmidt against the standard basis.

use super::matrix::{dot_conj, vec_norm_sqr, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// m×m unitary.
    pub u: ComplexMatrix,
    /// min(m, n) singular values, descending.
    pub sigma: Vec<f64>,
    /// n×n unitary.
    pub v: ComplexMatrix,
    pub rank: usize,
}

impl SvdFactors {
    pub fn rank_tolerance(&self) -> f64 {
        rank_tolerance(self.u.rows(), self.v.rows(), self.sigma.first().copied().unwrap_or(0.0))
    }

    /// The m×n rectangular diagonal matrix of singular values.
    pub fn sigma_matrix(&self) -> ComplexMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut s = ComplexMatrix::zeros(m, n);
        for (i, &x) in self.sigma.iter().enumerate() {
            s[(i, i)] = C64::new(x, 0.0);
        }
        s
    }

    /// `U · diag(sigma) · V*`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let us = self.u.matmul(&self.sigma_matrix()).expect("svd shapes");
        us.matmul(&self.v.adjoint()).expect("svd shapes")
    }
}

pub fn rank_tolerance(m: usize, n: usize, sigma_max: f64) -> f64 {
    m.max(n) as f64 * f64::EPSILON * sigma_max
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("svd of an empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("svd"));
    }

    let mut b: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { ONE } else { ZERO }).collect())
        .collect();

    // Columns below this squared norm are numerically zero; rotating them only
    // accumulates denormal noise in V.
    let negligible = (f64::EPSILON * a.frobenius_norm()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = vec_norm_sqr(&b[p]);
                let beta = vec_norm_sqr(&b[q]);
                let gamma = dot_conj(&b[p], &b[q]);
                let g = gamma.norm();
                if alpha.min(beta) <= negligible || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let phase = phase / phase.norm();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut b, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = b.iter().map(|col| vec_norm_sqr(col).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let k = m.min(n);
    let sigma: Vec<f64> = order[..k].iter().map(|&j| norms[j]).collect();
    let tol = rank_tolerance(m, n, sigma[0]);
    let rank = sigma.iter().filter(|&&s| s > tol).count();

    let mut v_cols: Vec<Vec<C64>> = order.iter().map(|&j| v[j].clone()).collect();
    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(m);
    for i in 0..rank {
        let inv = 1.0 / sigma[i];
        let mut col: Vec<C64> = b[order[i]].iter().map(|z| z * inv).collect();
        let ph = leading_phase(&col);
        for z in col.iter_mut() {
            *z *= ph;
        }
        for z in v_cols[i].iter_mut() {
            *z *= ph;
        }
        u_cols.push(col);
    }
    complete_orthonormal(&mut u_cols, m);

    Ok(SvdFactors {
        u: ComplexMatrix::from_columns(m, &u_cols),
        sigma,
        v: ComplexMatrix::from_columns(n, &v_cols),
        rank,
    })
}

/// Column op on (p, q): q ← e^{-iφ}·q, then a real Givens rotation.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, phase: C64, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let bp = *x;
        let bq = *y * phase;
        *x = bp * c - bq * s;
        *y = bp * s + bq * c;
    }
}

/// Unit phase that makes the first non-negligible entry real and nonnegative.
fn leading_phase(col: &[C64]) -> C64 {
    let scale = vec_norm_sqr(col).sqrt();
    col.iter()
        .find(|z| z.norm() > 1e-12 * scale.max(f64::MIN_POSITIVE))
        .map(|z| z.conj() / z.norm())
        .unwrap_or(ONE)
}

/// Extends orthonormal `cols` to a basis of C^m, greedily picking the standard
/// basis vector with the largest residual at each step.
fn complete_orthonormal(cols: &mut Vec<Vec<C64>>, m: usize) {
    while cols.len() < m {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..m {
            let mut r: Vec<C64> = (0..m).map(|i| if i == e { ONE } else { ZERO }).collect();
            for _ in 0..2 {
                for c in cols.iter() {
                    let proj = dot_conj(c, &r);
                    for (ri, ci) in r.iter_mut().zip(c) {
                        *ri -= proj * ci;
                    }
                }
            }
            let nr = vec_norm_sqr(&r).sqrt();
            if best.as_ref().is_none_or(|(bn, _)| nr > *bn) {
                best = Some((nr, r));
            }
        }
        let (nr, mut r) = best.expect("m > 0");
        for z in r.iter_mut() {
            *z /= nr;
        }
        let ph = leading_phase(&r);
        for z in r.iter_mut() {
            *z *= ph;
        }
        cols.push(r);
    }
}
