use alloc::vec::Vec;

/// Bootstrapped estimate of the discounted loss after a step.
pub trait Bootstrap {
    /// Value for `episode` after its (0-based) step `step`, where
    /// `step + 1 < T`.
    fn next_value(&self, episode: usize, step: usize) -> f64;
}

/// Precomputed bootstrap values, `[episode][step]`.
pub struct TableBootstrap(pub Vec<Vec<f64>>);

impl Bootstrap for TableBootstrap {
    fn next_value(&self, episode: usize, step: usize) -> f64 {
        self.0[episode][step]
    }
}

/// `y_t = L_t + gamma * next_value(t)` for all but the last step, and
/// `y_T = L_T`.
pub fn compute_targets(losses: &[Vec<f32>], gamma: f64, bootstrap: &impl Bootstrap) -> Vec<Vec<f64>> {
    losses
        .iter()
        .enumerate()
        .map(|(i, ls)| {
            let t_max = ls.len();
            ls.iter()
                .enumerate()
                .map(|(t, &l)| {
                    if t + 1 < t_max {
                        l as f64 + gamma * bootstrap.next_value(i, t)
                    } else {
                        l as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// Directly discounted future losses `sum_{t' >= t} gamma^(t'-t) L_t'`.
pub fn supervised_targets(losses: &[f32], gamma: f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; losses.len()];
    let mut acc = 0.0;
    for (t, &l) in losses.iter().enumerate().rev() {
        acc = l as f64 + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Weight of supervised targets at 0-based iteration `m` in decayed mode.
pub fn supervised_weight(m: u64, over: u64) -> f64 {
    if over == 0 {
        return 0.0;
    }
    (1.0 - m as f64 / over as f64).max(0.0)
}
