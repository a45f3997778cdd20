//! Inference cost of the agent networks.

use super::mlp::HIDDEN;

/// `2·(256·|S| + 128·|A| + 32768)`: two FLOPs per multiply-accumulate over the
/// three dense layers.
pub fn flops_estimate(state_dim: u64, action_dim: u64) -> u64 {
    let (h1, h2) = (HIDDEN[0] as u64, HIDDEN[1] as u64);
    2 * (h1 * state_dim + h2 * action_dim + h1 * h2)
}

/// The unfactored tabulated form `32768 + 256·K + 128·A`.
pub fn flops_table_form(k: u64, action_dim: u64) -> u64 {
    let (h1, h2) = (HIDDEN[0] as u64, HIDDEN[1] as u64);
    h1 * h2 + h1 * k + h2 * action_dim
}

/// Both forms for one (state, action) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopsReport {
    pub state_dim: u64,
    pub action_dim: u64,
    pub estimate: u64,
    pub table_form: u64,
}

impl FlopsReport {
    pub fn new(state_dim: u64, action_dim: u64) -> Self {
        Self {
            state_dim,
            action_dim,
            estimate: flops_estimate(state_dim, action_dim),
            table_form: flops_table_form(state_dim, action_dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_cases() {
        assert_eq!(flops_estimate(3, 1), 67_328);
        assert_eq!(flops_table_form(3, 1), 33_664);
        assert_eq!(flops_estimate(0, 0), 65_536);
    }

    #[test]
    fn estimate_counts_layer_products() {
        for s in 0..20u64 {
            for a in 0..20u64 {
                let layers = [(s, 256u64), (256, 128), (128, a)];
                let direct: u64 = layers.iter().map(|(i, o)| 2 * i * o).sum();
                assert_eq!(flops_estimate(s, a), direct);
                assert_eq!(2 * flops_table_form(s, a), direct);
            }
        }
    }
}
