use alloc::format;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TrainConfig;
use crate::{Error, Result};

/// Ornstein-Uhlenbeck rotation noise, in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseState {
    pub theta: f64,
    pub sigma: f64,
    pub mean: f64,
    /// Previous undecayed value.
    pub prev: f64,
}

impl NoiseState {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            theta: cfg.ou_theta,
            sigma: cfg.ou_sigma,
            mean: cfg.ou_mean,
            prev: cfg.ou_start,
        }
    }

    /// `eps = prev + theta * (mean - prev) + sigma * w`; the state keeps
    /// `eps`, the return value is `eps * scale`.
    pub fn step_with(&mut self, w: f64, scale: f64) -> f64 {
        let eps = self.prev + self.theta * (self.mean - self.prev) + self.sigma * w;
        self.prev = eps;
        eps * scale
    }

    pub fn step<R: Rng>(&mut self, rng: &mut R, scale: f64) -> f64 {
        let w: f64 = StandardNormal.sample(rng);
        self.step_with(w, scale)
    }
}

/// Linear decay of the applied noise, `1 - m / M`, at 0-based iteration `m`.
pub fn noise_scale(m: u64, total: u64, enabled: bool) -> f64 {
    if !enabled {
        return 1.0;
    }
    if total == 0 {
        return 0.0;
    }
    (1.0 - m as f64 / total as f64).max(0.0)
}

/// Rotate a unit direction counter-clockwise by `eps` radians.
pub fn rotate_action(direction: [f32; 2], eps: f64) -> Result<[f32; 2]> {
    let [x, y] = [direction[0] as f64, direction[1] as f64];
    let norm = libm::hypot(x, y);
    if !((norm - 1.0).abs() <= 1e-5) {
        return Err(Error::Contract(format!("direction {direction:?} is not a unit vector")));
    }
    if eps == 0.0 {
        return Ok(direction);
    }
    let (s, c) = (libm::sin(eps), libm::cos(eps));
    // Renormalize so that float rounding never drifts from unit length.
    let (rx, ry) = (c * x - s * y, s * x + c * y);
    let n = libm::hypot(rx, ry);
    Ok([(rx / n) as f32, (ry / n) as f32])
}
