//! Running statistics and observation scaling.

/// Welford mean and variance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance; zero before two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// `sign(x)·ln(1 + |x|)`
pub fn symlog(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

/// Symlog followed by per-dimension centering and division by `max(std, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationScaler {
    stats: Vec<RunningStats>,
}

impl ObservationScaler {
    pub fn new(dim: usize) -> Self {
        Self {
            stats: vec![RunningStats::default(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.stats.len()
    }

    pub fn transform(&mut self, x: &[f64], update: bool) -> Vec<f64> {
        x.iter()
            .zip(self.stats.iter_mut())
            .map(|(&v, s)| {
                let y = symlog(if v.is_nan() { 0.0 } else { v.clamp(-f64::MAX, f64::MAX) });
                if update {
                    s.push(y);
                }
                (y - s.mean()) / s.std().max(1.0)
            })
            .collect()
    }

    /// Flat `(count, mean, m2)` triples for serialization.
    pub fn to_flat(&self) -> Vec<f64> {
        self.stats.iter().flat_map(|s| [s.count as f64, s.mean, s.m2]).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Option<Self> {
        if flat.len() % 3 != 0 {
            return None;
        }
        let stats = flat
            .chunks(3)
            .map(|c| RunningStats {
                count: c[0] as u64,
                mean: c[1],
                m2: c[2],
            })
            .collect();
        Some(Self { stats })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 8.5, 3.25];
        let mut s = RunningStats::default();
        xs.iter().for_each(|&x| s.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((s.mean() - mean).abs() < 1e-12);
        assert!((s.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn symlog_is_odd_and_finite() {
        assert_eq!(symlog(0.0), 0.0);
        assert!((symlog(3.0) + symlog(-3.0)).abs() < 1e-15);
        assert!(symlog(1e300).is_finite());
    }

    #[test]
    fn scaler_handles_infinities() {
        let mut sc = ObservationScaler::new(2);
        let y = sc.transform(&[f64::INFINITY, f64::NAN], true);
        assert!(y.iter().all(|v| v.is_finite()));
        let back = ObservationScaler::from_flat(&sc.to_flat()).unwrap();
        assert_eq!(back, sc);
    }
}
