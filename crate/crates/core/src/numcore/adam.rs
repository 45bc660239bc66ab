use alloc::vec::Vec;

use super::{Real, Tensor};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiplier applied to every parameter after the step; 1.0 disables.
    pub decay: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay: 1.0,
        }
    }
}

/// Moment accumulators for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T = f32> {
    pub config: AdamConfig,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub step: u64,
    /// Tensors whose update was skipped because of a non-finite gradient.
    pub skipped: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Self {
        Self {
            config,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
            skipped: 0,
        }
    }

    /// Bias-corrected ADAM update at the configured learning rate. Returns the
    /// number of tensors skipped for non-finite gradients.
    pub fn update(&mut self, params: &mut [Tensor<T>], grads: &[Tensor<T>]) -> Result<usize> {
        let lr = self.config.lr;
        self.update_with_lr(params, grads, lr)
    }

    pub fn update_with_lr(
        &mut self,
        params: &mut [Tensor<T>],
        grads: &[Tensor<T>],
        lr: f64,
    ) -> Result<usize> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::dim("adam_step", &[params.len()], &[grads.len(), self.m.len()]));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::dim("adam_step", p.shape(), g.shape()));
            }
        }
        self.step += 1;
        let cfg = self.config;
        let t = self.step as i32;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = T::of(1.0 - libm::pow(cfg.beta1, t as f64));
        let c2 = T::of(1.0 - libm::pow(cfg.beta2, t as f64));
        let (lr, eps, decay) = (T::of(lr), T::of(cfg.eps), T::of(cfg.decay));
        let one = T::one();
        let mut skipped = 0;
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if !g.all_finite() {
                skipped += 1;
                log::warn!("adam: non-finite gradient for tensor {i}, update skipped");
            } else {
                let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
                for (((pv, &gv), mv), vv) in
                    p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut())
                {
                    *mv = b1 * *mv + (one - b1) * gv;
                    *vv = b2 * *vv + (one - b2) * gv * gv;
                    let mhat = *mv / c1;
                    let vhat = *vv / c2;
                    *pv -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
            if decay != one {
                p.data_mut().iter_mut().for_each(|v| *v *= decay);
            }
        }
        self.skipped += skipped as u64;
        Ok(skipped)
    }
}
