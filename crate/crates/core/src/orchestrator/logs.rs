use crate::drl::Algorithm;
use crate::report::{fmt_float, fmt_floats, fmt_opt, CsvRecord};

/// One clustering-level step.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStep {
    pub episode: usize,
    pub step: usize,
    pub algorithm: Algorithm,
    /// Configuration index chosen.
    pub action: usize,
    pub reward: f64,
    pub log_reward: f64,
    pub sum_rate: f64,
    pub rates: Vec<f64>,
    pub losses: Vec<f64>,
    /// Mean Q or state value at the visited state, when the agent has one.
    pub value: Option<f64>,
    pub exploration: f64,
}

/// One beamsteering-level step inside outer step (`outer_episode`, `outer_step`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamStep {
    pub outer_episode: usize,
    pub outer_step: usize,
    pub cluster: usize,
    pub episode: usize,
    pub step: usize,
    pub algorithm: Algorithm,
    /// Objective over its bound.
    pub reward: f64,
    pub objective: f64,
    pub rates: Vec<f64>,
    pub losses: Vec<f64>,
    pub value: Option<f64>,
    pub exploration: f64,
}

fn loss_fields(losses: &[f64]) -> [String; 3] {
    [0, 1, 2].map(|i| fmt_opt(losses.get(i).copied()))
}

impl CsvRecord for ClusterStep {
    fn header() -> Vec<&'static str> {
        vec![
            "episode",
            "step",
            "algorithm",
            "action",
            "reward",
            "log_reward",
            "sum_rate",
            "ue_rates",
            "loss_0",
            "loss_1",
            "loss_2",
            "value",
            "exploration",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let [l0, l1, l2] = loss_fields(&self.losses);
        vec![
            self.episode.to_string(),
            self.step.to_string(),
            self.algorithm.to_string(),
            self.action.to_string(),
            fmt_float(self.reward),
            fmt_float(self.log_reward),
            fmt_float(self.sum_rate),
            fmt_floats(&self.rates),
            l0,
            l1,
            l2,
            fmt_opt(self.value),
            fmt_float(self.exploration),
        ]
    }
}

impl CsvRecord for BeamStep {
    fn header() -> Vec<&'static str> {
        vec![
            "outer_episode",
            "outer_step",
            "cluster",
            "episode",
            "step",
            "algorithm",
            "reward",
            "objective",
            "ue_rates",
            "loss_0",
            "loss_1",
            "loss_2",
            "value",
            "exploration",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let [l0, l1, l2] = loss_fields(&self.losses);
        vec![
            self.outer_episode.to_string(),
            self.outer_step.to_string(),
            self.cluster.to_string(),
            self.episode.to_string(),
            self.step.to_string(),
            self.algorithm.to_string(),
            fmt_float(self.reward),
            fmt_float(self.objective),
            fmt_floats(&self.rates),
            l0,
            l1,
            l2,
            fmt_opt(self.value),
            fmt_float(self.exploration),
        ]
    }
}

/// Mean reward of every episode, in episode order.
pub fn episode_means(steps: &[ClusterStep]) -> Vec<f64> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for s in steps {
        if out.len() <= s.episode {
            out.resize(s.episode + 1, (0.0, 0));
        }
        out[s.episode].0 += s.reward;
        out[s.episode].1 += 1;
    }
    out.into_iter().map(|(sum, n)| if n > 0 { sum / n as f64 } else { 0.0 }).collect()
}

/// Mean of the last `window` values (all of them when fewer).
pub fn tail_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(episode: usize, reward: f64) -> ClusterStep {
        ClusterStep {
            episode,
            step: 0,
            algorithm: Algorithm::Pg,
            action: 0,
            reward,
            log_reward: reward.ln(),
            sum_rate: 0.0,
            rates: vec![1.0, 2.0],
            losses: vec![0.5],
            value: None,
            exploration: 0.0,
        }
    }

    #[test]
    fn episode_statistics() {
        let steps = [step(0, 1.0), step(0, 3.0), step(1, 4.0)];
        assert_eq!(episode_means(&steps), vec![2.0, 4.0]);
        assert_eq!(tail_mean(&[1.0, 2.0, 3.0], 2), 2.5);
        assert_eq!(tail_mean(&[1.0], 10), 1.0);
        assert_eq!(variance(&[1.0, 3.0]), 1.0);
    }

    #[test]
    fn record_widths_match_headers() {
        assert_eq!(step(0, 1.0).fields().len(), ClusterStep::header().len());
        let b = BeamStep {
            outer_episode: 0,
            outer_step: 0,
            cluster: 1,
            episode: 0,
            step: 0,
            algorithm: Algorithm::Sac,
            reward: 0.5,
            objective: 2.0,
            rates: vec![],
            losses: vec![1.0, 2.0, 3.0],
            value: Some(1.0),
            exploration: 0.2,
        };
        assert_eq!(b.fields().len(), BeamStep::header().len());
        assert_eq!(step(0, 1.0).fields()[8..11], ["5.000000000e-1".to_string(), String::new(), String::new()]);
    }
}
