use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numcore::{Real, Tape, Tensor, Var};
use crate::{Error, Result};

/// Ordered, named parameter tensors of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<T = f32> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> Default for ParamSet<T> {
    fn default() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }
}

impl<T: Real> ParamSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, t: Tensor<T>) -> usize {
        self.names.push(name.into());
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    /// Replace every tensor, keeping names; shapes must match.
    pub fn assign(&mut self, tensors: Vec<Tensor<T>>) -> Result<()> {
        if tensors.len() != self.tensors.len() {
            return Err(Error::dim("assign", &[self.tensors.len()], &[tensors.len()]));
        }
        for (a, b) in self.tensors.iter().zip(&tensors) {
            if a.shape() != b.shape() {
                return Err(Error::dim("assign", a.shape(), b.shape()));
            }
        }
        self.tensors = tensors;
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ParamSet<U> {
        ParamSet {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Record every tensor as a leaf of `tape`.
    pub fn bind(&self, tape: &mut Tape<T>, trainable: bool) -> Vec<Var> {
        self.tensors.iter().map(|t| tape.leaf(t.clone(), trainable)).collect()
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// `target <- beta * target + (1 - beta) * live`, elementwise.
pub fn soft_update<T: Real>(live: &ParamSet<T>, target: &mut ParamSet<T>, beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(alloc::format!("soft update rate {beta} is not in [0, 1]")));
    }
    if live.len() != target.len() {
        return Err(Error::dim("soft_update", &[live.len()], &[target.len()]));
    }
    for (l, t) in live.tensors.iter().zip(&target.tensors) {
        if l.shape() != t.shape() {
            return Err(Error::dim("soft_update", l.shape(), t.shape()));
        }
    }
    let (b, a) = (T::of(beta), T::of(1.0 - beta));
    for (l, t) in live.tensors.iter().zip(target.tensors.iter_mut()) {
        for (tv, &lv) in t.data_mut().iter_mut().zip(l.data()) {
            *tv = b * *tv + a * lv;
        }
    }
    Ok(())
}

/// Normal(0, std) resampled until within two standard deviations.
pub fn truncated_normal<T: Real>(shape: &[usize], std: f64, rng: &mut impl Rng) -> Tensor<T> {
    Tensor::from_fn(shape, |_| loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= 2.0 {
            break T::of(z * std);
        }
    })
}

/// Xavier/Glorot uniform initialization for a `[a, b, k, k]` kernel.
pub fn xavier_uniform<T: Real>(shape: &[usize], rng: &mut impl Rng) -> Tensor<T> {
    let rf: usize = shape[2..].iter().product();
    let bound = libm::sqrt(6.0 / ((shape[0] + shape[1]) * rf) as f64);
    Tensor::from_fn(shape, |_| T::of(rng.gen_range(-bound..bound)))
}
