//! AP/UE cluster configurations: the discrete action space of the clustering agent.
//!
//! A configuration assigns every AP and every UE to one of N labeled clusters,
//! each holding at least one of both. Enumeration order is canonical: AP set
//! partitions in restricted-growth-string (RGS) order, then UE partitions in RGS
//! order, then the permutations matching UE blocks to cluster labels in
//! lexicographic order. AP block `b` is always cluster `b`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const DEFAULT_CAP: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterConfig {
    clusters: usize,
    ap_cluster: Vec<usize>,
    ue_cluster: Vec<usize>,
}

impl ClusterConfig {
    /// Builds and validates a configuration from the two membership maps.
    pub fn new(clusters: usize, ap_cluster: Vec<usize>, ue_cluster: Vec<usize>) -> Result<Self> {
        let cfg = Self {
            clusters,
            ap_cluster,
            ue_cluster,
        };
        cfg.validate(usize::MAX)?;
        Ok(cfg)
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn ap_cluster(&self) -> &[usize] {
        &self.ap_cluster
    }

    pub fn ue_cluster(&self) -> &[usize] {
        &self.ue_cluster
    }

    /// AP indices of cluster `n`, ascending.
    pub fn aps_of(&self, n: usize) -> Vec<usize> {
        members(&self.ap_cluster, n)
    }

    /// UE indices of cluster `n`, ascending.
    pub fn ues_of(&self, n: usize) -> Vec<usize> {
        members(&self.ue_cluster, n)
    }

    pub fn ap_sizes(&self) -> Vec<usize> {
        sizes(&self.ap_cluster, self.clusters)
    }

    pub fn ue_sizes(&self) -> Vec<usize> {
        sizes(&self.ue_cluster, self.clusters)
    }

    /// Checks labels, nonempty clusters and `D_U[n] <= max_ues`.
    pub fn validate(&self, max_ues: usize) -> Result<()> {
        let n = self.clusters;
        if n == 0 {
            return Err(Error::InvalidArgument("configuration needs at least one cluster".into()));
        }
        if let Some(&bad) = self.ap_cluster.iter().chain(&self.ue_cluster).find(|&&c| c >= n) {
            return Err(Error::IndexOutOfRange { index: bad, size: n });
        }
        let (da, du) = (self.ap_sizes(), self.ue_sizes());
        if let Some(c) = (0..n).find(|&c| da[c] == 0 || du[c] == 0) {
            return Err(Error::InvalidArgument(format!(
                "cluster {c} needs at least one AP and one UE (has {} APs, {} UEs)",
                da[c], du[c]
            )));
        }
        if let Some(c) = (0..n).find(|&c| du[c] > max_ues) {
            return Err(Error::InvalidArgument(format!(
                "cluster {c} holds {} UEs, more than the {max_ues} RF chains",
                du[c]
            )));
        }
        Ok(())
    }
}

fn members(map: &[usize], n: usize) -> Vec<usize> {
    map.iter()
        .enumerate()
        .filter(|(_, &c)| c == n)
        .map(|(i, _)| i)
        .collect()
}

fn sizes(map: &[usize], n: usize) -> Vec<usize> {
    let mut s = vec![0; n];
    for &c in map {
        if c < n {
            s[c] += 1;
        }
    }
    s
}

fn check_range(m: usize, n: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::InvalidArgument(format!("need 1 <= N <= M, got M = {m}, N = {n}")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> BigUint {
    // Pascal row by row keeps everything in exact integers.
    let mut row = vec![BigUint::one()];
    for i in 1..=n {
        let mut next = vec![BigUint::one(); i + 1];
        for j in 1..i {
            next[j] = &row[j - 1] + &row[j];
        }
        row = next;
    }
    row.get(k).cloned().unwrap_or_else(BigUint::zero)
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Stirling number of the second kind by the alternating-sum closed form
/// `S(M, N) = (1/N!) Σ_{i=0}^{N} (−1)^i C(N, i) (N − i)^M`, in exact arithmetic.
pub fn stirling2(m: usize, n: usize) -> Result<BigUint> {
    check_range(m, n)?;
    let mut acc = BigInt::zero();
    for i in 0..=n {
        let term = BigInt::from(binomial(n, i)) * BigInt::from(n - i).pow(m as u32);
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let s = acc / BigInt::from(factorial(n));
    Ok(s.to_biguint().expect("Stirling numbers are nonnegative"))
}

/// Number of labeled configurations without the RF-chain filter: `N!·S(M,N)·S(K,N)`.
pub fn config_count_closed(m: usize, k: usize, n: usize) -> Result<BigUint> {
    check_range(m, n)?;
    check_range(k, n)?;
    Ok(factorial(n) * stirling2(m, n)? * stirling2(k, n)?)
}

/// The printed closed form `(N!/√2)²·S(M,N)·S(K,N)`, evaluated literally.
pub fn config_count_paper(m: usize, k: usize, n: usize) -> Result<f64> {
    check_range(m, n)?;
    check_range(k, n)?;
    let f = factorial(n).to_f64().unwrap_or(f64::INFINITY);
    let s = stirling2(m, n)?.to_f64().unwrap_or(f64::INFINITY) * stirling2(k, n)?.to_f64().unwrap_or(f64::INFINITY);
    Ok(f * f / 2.0 * s)
}

/// Partitions of `k` items into `n` unlabeled blocks of size at most `l`.
fn bounded_partition_count(k: usize, n: usize, l: usize) -> BigUint {
    // t[i][j]: partitions of i items into j blocks, the block holding the first
    // item having size s chosen with C(i-1, s-1) companions.
    let mut t = vec![vec![BigUint::zero(); n + 1]; k + 1];
    t[0][0] = BigUint::one();
    for i in 1..=k {
        for j in 1..=n.min(i) {
            let mut acc = BigUint::zero();
            for s in 1..=l.min(i) {
                if !t[i - s][j - 1].is_zero() {
                    acc += binomial(i - 1, s - 1) * &t[i - s][j - 1];
                }
            }
            t[i][j] = acc;
        }
    }
    t[k][n].clone()
}

/// Size of the enumerated space including the `D_U <= L` filter.
pub fn config_count_filtered(m: usize, k: usize, n: usize, l: usize) -> Result<BigUint> {
    check_range(m, n)?;
    check_range(k, n)?;
    Ok(factorial(n) * stirling2(m, n)? * bounded_partition_count(k, n, l))
}

/// Restricted growth strings of length `len` using exactly `blocks` labels,
/// in lexicographic order.
pub fn restricted_growth_strings(len: usize, blocks: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: usize, len: usize, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if blocks - used > len - cur.len() {
            return;
        }
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for label in 0..=used.min(blocks - 1) {
            cur.push(label);
            rec(cur, used.max(label + 1), len, blocks, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if blocks == 0 || blocks > len {
        return out;
    }
    rec(&mut Vec::with_capacity(len), 0, len, blocks, &mut out);
    out
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("pivot successor");
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}

/// The enumerated configuration list with its inverse index.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    pub aps: usize,
    pub ues: usize,
    pub clusters: usize,
    pub max_ues: usize,
    configs: Vec<ClusterConfig>,
    index: HashMap<ClusterConfig, usize>,
}

impl ConfigSpace {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[ClusterConfig] {
        &self.configs
    }

    pub fn config_index(&self, cfg: &ClusterConfig) -> Result<usize> {
        self.index.get(cfg).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("configuration {cfg:?} is outside the enumerated space"))
        })
    }

    pub fn config_from_index(&self, j: usize) -> Result<&ClusterConfig> {
        self.configs.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            size: self.configs.len(),
        })
    }
}

/// Enumerates every valid configuration in canonical order, refusing spaces
/// larger than `cap`.
pub fn enumerate_configs(m: usize, k: usize, n: usize, l: usize, cap: u64) -> Result<ConfigSpace> {
    check_range(m, n)?;
    check_range(k, n)?;
    let count = config_count_filtered(m, k, n, l)?;
    if count.is_zero() {
        return Err(Error::InvalidConfig(format!(
            "no partition of {k} UEs into {n} clusters keeps every cluster at <= {l} UEs"
        )));
    }
    if count > BigUint::from(cap) {
        return Err(Error::ActionSpaceTooLarge {
            count: count.to_string(),
            cap,
        });
    }
    let ap_parts = restricted_growth_strings(m, n);
    let ue_parts: Vec<Vec<usize>> = restricted_growth_strings(k, n)
        .into_iter()
        .filter(|rgs| sizes(rgs, n).iter().all(|&s| s <= l))
        .collect();
    let perms = permutations(n);
    let mut configs = Vec::with_capacity(count.to_usize().unwrap_or(0));
    for ap in &ap_parts {
        for ue in &ue_parts {
            for perm in &perms {
                configs.push(ClusterConfig {
                    clusters: n,
                    ap_cluster: ap.clone(),
                    ue_cluster: ue.iter().map(|&b| perm[b]).collect(),
                });
            }
        }
    }
    let index = configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    Ok(ConfigSpace {
        aps: m,
        ues: k,
        clusters: n,
        max_ues: l,
        configs,
        index,
    })
}

/// Side-by-side counts for the `count-configs` report.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub enumerated: BigUint,
    pub closed_form: BigUint,
    pub paper_formula: f64,
}

impl CountReport {
    pub fn new(m: usize, k: usize, n: usize, l: usize) -> Result<Self> {
        Ok(Self {
            enumerated: config_count_filtered(m, k, n, l)?,
            closed_form: config_count_closed(m, k, n)?,
            paper_formula: config_count_paper(m, k, n)?,
        })
    }

    /// True when the printed formula disagrees with the exact labeled count.
    pub fn paper_discrepancy(&self) -> bool {
        match self.closed_form.to_f64() {
            Some(x) => (x - self.paper_formula).abs() > 1e-9 * x.max(1.0),
            None => true,
        }
    }
}
