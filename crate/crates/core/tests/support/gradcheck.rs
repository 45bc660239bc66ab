// Central finite-difference oracle for tape gradients (64-bit).
//
// Relative error of one tensor = max_i |analytic_i - numeric_i| / max_i |numeric_i|
// (floored at 1e-8 so all-zero gradients compare absolutely).

#![allow(dead_code)]

use adascan_core::numcore::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;

pub fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

/// Random tensor whose entries stay at least `margin` away from zero, so
/// ReLU kinks are never straddled by a finite-difference step.
pub fn random_away_from_zero(shape: &[usize], seed: u64, margin: f64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| {
        let v: f64 = rng.gen_range(margin..1.0);
        if rng.gen_bool(0.5) { v } else { -v }
    })
}

/// Reduce an arbitrary tensor to a scalar through fixed random weights, so
/// that no gradient cancels by symmetry (e.g. after batch normalization).
pub fn weighted_sum(tape: &mut Tape<f64>, x: Var, seed: u64) -> Var {
    let w = random(tape.value(x).shape(), seed ^ 0x5eed);
    let w = tape.constant(w);
    let p = tape.mul(x, w).unwrap();
    tape.sum(p).unwrap()
}

fn eval<F>(inputs: &[Tensor<f64>], f: &F) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f(&mut tape, &vars);
    tape.value(loss).item()
}

/// Largest per-tensor relative error over all inputs, checking at most
/// `max_per_tensor` evenly spaced elements of each input.
pub fn max_rel_error_sampled<F>(inputs: &[Tensor<f64>], f: F, max_per_tensor: usize) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    max_rel_error_with_step(inputs, f, max_per_tensor, STEP)
}

/// As [`max_rel_error_sampled`] with an explicit difference step. Wide ReLU
/// networks need a smaller step so that no unit crosses its kink.
pub fn max_rel_error_with_step<F>(inputs: &[Tensor<f64>], f: F, max_per_tensor: usize, step: f64) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f(&mut tape, &vars);
    let grads = tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v);
        let n = inputs[i].len();
        let stride = n.div_ceil(max_per_tensor.max(1)).max(1);
        let mut num_max: f64 = 0.0;
        let mut diff_max: f64 = 0.0;
        for j in (0..n).step_by(stride) {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += step;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= step;
            let numeric = (eval(&plus, &f) - eval(&minus, &f)) / (2.0 * step);
            num_max = num_max.max(numeric.abs());
            diff_max = diff_max.max((analytic.data()[j] - numeric).abs());
        }
        worst = worst.max(diff_max / num_max.max(1e-8));
    }
    worst
}

pub fn max_rel_error<F>(inputs: &[Tensor<f64>], f: F) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    max_rel_error_sampled(inputs, f, usize::MAX)
}
