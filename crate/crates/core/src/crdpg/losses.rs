use alloc::vec::Vec;

use super::TrainConfig;
use crate::{Error, Result};

/// Running mean and mean square of generator losses.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RunningStats {
    pub avg: f32,
    pub sq_avg: f32,
    pub initialized: bool,
}

impl RunningStats {
    pub fn variance(&self) -> f32 {
        (self.sq_avg - self.avg * self.avg).max(0.0)
    }

    pub fn std(&self) -> f32 {
        libm::sqrtf(self.variance())
    }

    /// First batch initializes both moments; later batches update them as
    /// exponential moving averages with rate `beta`.
    pub fn update(&mut self, losses: &[f32], beta: f64) -> Result<()> {
        if losses.is_empty() {
            return Err(Error::Usage("running stats need a nonempty batch".into()));
        }
        let n = losses.len() as f64;
        let mean = losses.iter().map(|&v| v as f64).sum::<f64>() / n;
        let sq = losses.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / n;
        if self.initialized {
            self.avg = (beta * self.avg as f64 + (1.0 - beta) * mean) as f32;
            self.sq_avg = (beta * self.sq_avg as f64 + (1.0 - beta) * sq) as f32;
        } else {
            self.avg = mean as f32;
            self.sq_avg = sq as f32;
            self.initialized = true;
        }
        Ok(())
    }

    /// The smaller of `loss` and three standard deviations above the mean.
    pub fn clip(&self, loss: f32) -> f32 {
        loss.min(self.avg + 3.0 * self.std())
    }
}

/// Step losses `L_1..L_T` of one episode: the over-edge penalty at each
/// flagged step, plus the normalized (optionally clipped) generator loss at
/// the final step.
pub fn compute_step_losses(
    gen_loss: f32,
    over_edge: &[bool],
    stats: &RunningStats,
    cfg: &TrainConfig,
) -> Result<Vec<f32>> {
    if !stats.initialized {
        return Err(Error::Usage("running stats are not initialized".into()));
    }
    let penalty = cfg.env.over_edge_penalty;
    let mut out: Vec<f32> = over_edge.iter().map(|&f| if f { penalty } else { 0.0 }).collect();
    let g = if cfg.clip_enabled { stats.clip(gen_loss) } else { gen_loss };
    if let Some(last) = out.last_mut() {
        *last += g / stats.avg;
    }
    Ok(out)
}
