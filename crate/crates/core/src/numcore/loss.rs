//! Value-level loss helpers. The differentiable versions live on
//! [`Tape`](super::Tape) and delegate here for their forward values.

use alloc::vec;
use alloc::vec::Vec;

use super::{conv, Real, Tensor};
use crate::{Error, Result};

pub fn mse<T: Real>(pred: &[T], target: &[T]) -> T {
    let sq: T = pred.iter().zip(target).map(|(&p, &t)| (p - t) * (p - t)).sum();
    sq / T::of(pred.len() as f64)
}

/// Per-sample MSE of equally sized samples laid out back to back.
pub fn mse_per_sample<T: Real>(pred: &[T], target: &[T], samples: usize) -> Vec<T> {
    let n = pred.len() / samples;
    pred.chunks(n).zip(target.chunks(n)).map(|(p, t)| mse(p, t)).collect()
}

/// Horizontal and vertical 3x3 Sobel kernels as a `[2, 1, 3, 3]` tensor.
pub fn sobel_kernel<T: Real>() -> Tensor<T> {
    let k: [f64; 18] = [
        -1., 0., 1., -2., 0., 2., -1., 0., 1., //
        -1., -2., -1., 0., 0., 0., 1., 2., 1.,
    ];
    Tensor::new(&[2, 1, 3, 3], k.iter().map(|&v| T::of(v)).collect()).unwrap()
}

/// Sobel responses of `[b, 1, h, w]` images with zero padding: `[b, 2, h, w]`.
pub fn sobel<T: Real>(x: &Tensor<T>) -> Result<Tensor<T>> {
    conv::conv2d(x, &sobel_kernel(), 1)
}

pub(crate) fn as_batched_image(shape: &[usize]) -> Result<Vec<usize>> {
    match shape {
        [h, w] => Ok(vec![1, 1, *h, *w]),
        [b, 1, h, w] => Ok(vec![*b, 1, *h, *w]),
        _ => Err(Error::dim("sobel_loss", shape, &[0, 1, 0, 0])),
    }
}

/// Per-sample maximum tile MSE and the `(row, col)` of the worst tile.
pub fn region_max<T: Real>(
    pred: &Tensor<T>,
    target: &Tensor<T>,
    region: usize,
) -> Result<(Vec<T>, Vec<(usize, usize)>)> {
    let shape = pred.shape();
    if shape.len() < 2 {
        return Err(Error::dim("region_max_mse", shape, &[0, 0]));
    }
    let (h, w) = (shape[shape.len() - 2], shape[shape.len() - 1]);
    if region == 0 || h < region || w < region {
        return Err(Error::Config(alloc::format!(
            "image {h}x{w} is smaller than the {region}x{region} region"
        )));
    }
    let (ty, tx) = (h / region, w / region);
    let denom = T::of((region * region) as f64);
    let mut losses = Vec::new();
    let mut tiles = Vec::new();
    for (p, t) in pred.data().chunks(h * w).zip(target.data().chunks(h * w)) {
        let mut best = (T::neg_infinity(), (0, 0));
        for by in 0..ty {
            for bx in 0..tx {
                let mut sq = T::zero();
                for y in by * region..(by + 1) * region {
                    for x in bx * region..(bx + 1) * region {
                        let e = p[y * w + x] - t[y * w + x];
                        sq += e * e;
                    }
                }
                let m = sq / denom;
                if m > best.0 {
                    best = (m, (by, bx));
                }
            }
        }
        losses.push(best.0);
        tiles.push(best.1);
    }
    Ok((losses, tiles))
}
