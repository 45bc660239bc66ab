//! Dense tensors, reverse-mode differentiation, losses and ADAM.

mod adam;
mod conv;
pub mod loss;
mod real;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use real::Real;
pub use tape::{Activation, BatchNormStats, Gradients, NormMode, Tape, Var, BN_EPS, BN_MOMENTUM};
pub use tensor::Tensor;

/// Forward-only convolution of concrete tensors (no tape).
pub fn conv2d<T: Real>(x: &Tensor<T>, kernel: &Tensor<T>, stride: usize) -> crate::Result<Tensor<T>> {
    conv::conv2d(x, kernel, stride)
}

/// Forward-only transposed convolution of concrete tensors (no tape).
pub fn conv2d_transpose<T: Real>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
) -> crate::Result<Tensor<T>> {
    conv::conv2d_transpose(x, kernel, stride)
}
