//! Convolution kernels (im2col + GEMM) shared by the tape operations.

use alloc::vec;
use alloc::vec::Vec;

use super::{Real, Tensor};
use crate::{Error, Result};

/// Geometry of a zero-padded "same" convolution with odd kernel `k`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub ho: usize,
    pub wo: usize,
}

impl ConvGeom {
    pub fn new(c: usize, h: usize, w: usize, k: usize, stride: usize) -> Result<Self> {
        if k % 2 == 0 {
            return Err(Error::Config(alloc::format!("kernel size {k} is not odd")));
        }
        if stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(Self {
            c,
            h,
            w,
            k,
            stride,
            pad: (k - 1) / 2,
            ho: h.div_ceil(stride),
            wo: w.div_ceil(stride),
        })
    }

    pub fn col_rows(&self) -> usize {
        self.c * self.k * self.k
    }

    pub fn col_cols(&self) -> usize {
        self.ho * self.wo
    }

    /// Input row read by output row `o` at kernel offset `kk`, if in bounds.
    #[inline]
    fn src(&self, o: usize, kk: usize, extent: usize) -> Option<usize> {
        let i = (o * self.stride + kk) as isize - self.pad as isize;
        (i >= 0 && (i as usize) < extent).then_some(i as usize)
    }

    /// Output columns `lo..hi` whose input column `ox * stride + kx - pad`
    /// is in bounds, and the input column of `lo`.
    #[inline]
    fn col_span(&self, kx: usize) -> (usize, usize, usize) {
        let s = self.stride;
        let lo = if kx >= self.pad { 0 } else { (self.pad - kx).div_ceil(s) };
        let last = self.w - 1 + self.pad;
        let hi = if last < kx { 0 } else { ((last - kx) / s + 1).min(self.wo) };
        let lo = lo.min(hi);
        (lo, hi, (lo * s + kx).saturating_sub(self.pad))
    }
}

pub(crate) fn im2col<T: Real>(g: &ConvGeom, x: &[T], cols: &mut [T]) {
    let n = g.col_cols();
    let s = g.stride;
    for c in 0..g.c {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (c * g.k + ky) * g.k + kx;
                let out = &mut cols[row * n..(row + 1) * n];
                let (lo, hi, ix0) = g.col_span(kx);
                for oy in 0..g.ho {
                    let dst = &mut out[oy * g.wo..(oy + 1) * g.wo];
                    let Some(iy) = g.src(oy, ky, g.h) else {
                        dst.fill(T::zero());
                        continue;
                    };
                    let src = &plane[iy * g.w..(iy + 1) * g.w];
                    dst[..lo].fill(T::zero());
                    dst[hi..].fill(T::zero());
                    if s == 1 {
                        dst[lo..hi].copy_from_slice(&src[ix0..ix0 + hi - lo]);
                    } else {
                        for (j, d) in dst[lo..hi].iter_mut().enumerate() {
                            *d = src[ix0 + j * s];
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]; accumulates into `x`.
pub(crate) fn col2im<T: Real>(g: &ConvGeom, cols: &[T], x: &mut [T]) {
    let n = g.col_cols();
    let s = g.stride;
    for c in 0..g.c {
        let plane = &mut x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (c * g.k + ky) * g.k + kx;
                let src = &cols[row * n..(row + 1) * n];
                let (lo, hi, ix0) = g.col_span(kx);
                for oy in 0..g.ho {
                    let Some(iy) = g.src(oy, ky, g.h) else { continue };
                    let line = &mut plane[iy * g.w..(iy + 1) * g.w];
                    let vals = &src[oy * g.wo + lo..oy * g.wo + hi];
                    if s == 1 {
                        for (d, &v) in line[ix0..ix0 + vals.len()].iter_mut().zip(vals) {
                            *d += v;
                        }
                    } else {
                        for (j, &v) in vals.iter().enumerate() {
                            line[ix0 + j * s] += v;
                        }
                    }
                }
            }
        }
    }
}

fn kernel_dims<T: Real>(k: &Tensor<T>, op: &'static str) -> Result<(usize, usize, usize)> {
    match k.shape()[..] {
        [a, b, kh, kw] if kh == kw => Ok((a, b, kh)),
        _ => Err(Error::dim(op, k.shape(), &[0, 0, 0, 0])),
    }
}

fn out_shape(rank3: bool, b: usize, c: usize, h: usize, w: usize) -> Vec<usize> {
    if rank3 {
        vec![c, h, w]
    } else {
        vec![b, c, h, w]
    }
}

/// Forward cross-correlation. `x`: `[b, c_in, h, w]` (or `[c_in, h, w]`),
/// `k`: `[c_out, c_in, k, k]`.
pub(crate) fn conv2d<T: Real>(x: &Tensor<T>, k: &Tensor<T>, stride: usize) -> Result<Tensor<T>> {
    let (b, c, h, w) = x.dims4("conv2d")?;
    let (co, ci, ks) = kernel_dims(k, "conv2d")?;
    if ci != c {
        return Err(Error::dim("conv2d", x.shape(), k.shape()));
    }
    let g = ConvGeom::new(c, h, w, ks, stride)?;
    let (rows, n) = (g.col_rows(), g.col_cols());
    let mut cols = vec![T::zero(); rows * n];
    let mut out = vec![T::zero(); b * co * n];
    for (xb, ob) in x.data().chunks(c * h * w).zip(out.chunks_mut(co * n)) {
        im2col(&g, xb, &mut cols);
        T::gemm(co, rows, n, T::one(), k.data(), false, &cols, false, T::zero(), ob);
    }
    Tensor::new(&out_shape(x.rank() == 3, b, co, g.ho, g.wo), out)
}

/// Gradients of [`conv2d`] w.r.t. input and kernel.
pub(crate) fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    k: &Tensor<T>,
    stride: usize,
    dout: &Tensor<T>,
    need_dx: bool,
) -> Result<(Option<Tensor<T>>, Tensor<T>)> {
    let (_, c, h, w) = x.dims4("conv2d")?;
    let (co, _, ks) = kernel_dims(k, "conv2d")?;
    let g = ConvGeom::new(c, h, w, ks, stride)?;
    let (rows, n) = (g.col_rows(), g.col_cols());
    let mut cols = vec![T::zero(); rows * n];
    let mut dx = need_dx.then(|| Tensor::zeros(x.shape()));
    let mut dk = Tensor::zeros(k.shape());
    for (i, (xb, db)) in x.data().chunks(c * h * w).zip(dout.data().chunks(co * n)).enumerate() {
        im2col(&g, xb, &mut cols);
        T::gemm(co, n, rows, T::one(), db, false, &cols, true, T::one(), dk.data_mut());
        if let Some(dx) = dx.as_mut() {
            T::gemm(rows, co, n, T::one(), k.data(), true, db, false, T::zero(), &mut cols);
            col2im(&g, &cols, &mut dx.data_mut()[i * c * h * w..(i + 1) * c * h * w]);
        }
    }
    Ok((dx, dk))
}

/// Transposed (fractionally strided) convolution: the adjoint of
/// [`conv2d`] with the same kernel. `y`: `[b, d_in, h, w]`,
/// `k`: `[d_in, d_out, k, k]`; output `[b, d_out, stride*h, stride*w]`.
pub(crate) fn conv2d_transpose<T: Real>(
    y: &Tensor<T>,
    k: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>> {
    let (b, d_in, h, w) = y.dims4("conv2d_transpose")?;
    let (kd_in, d_out, ks) = kernel_dims(k, "conv2d_transpose")?;
    if kd_in != d_in {
        return Err(Error::dim("conv2d_transpose", y.shape(), k.shape()));
    }
    let g = ConvGeom::new(d_out, h * stride, w * stride, ks, stride)?;
    let (rows, n) = (g.col_rows(), g.col_cols());
    let img = d_out * g.h * g.w;
    let mut cols = vec![T::zero(); rows * n];
    let mut out = vec![T::zero(); b * img];
    for (yb, ob) in y.data().chunks(d_in * h * w).zip(out.chunks_mut(img)) {
        T::gemm(rows, d_in, n, T::one(), k.data(), true, yb, false, T::zero(), &mut cols);
        col2im(&g, &cols, ob);
    }
    Tensor::new(&out_shape(y.rank() == 3, b, d_out, g.h, g.w), out)
}

pub(crate) fn conv2d_transpose_backward<T: Real>(
    y: &Tensor<T>,
    k: &Tensor<T>,
    stride: usize,
    dout: &Tensor<T>,
    need_dy: bool,
) -> Result<(Option<Tensor<T>>, Tensor<T>)> {
    let (_, d_in, h, w) = y.dims4("conv2d_transpose")?;
    let (_, d_out, ks) = kernel_dims(k, "conv2d_transpose")?;
    let g = ConvGeom::new(d_out, h * stride, w * stride, ks, stride)?;
    let (rows, n) = (g.col_rows(), g.col_cols());
    let img = d_out * g.h * g.w;
    let mut cols = vec![T::zero(); rows * n];
    let mut dy = need_dy.then(|| Tensor::zeros(y.shape()));
    let mut dk = Tensor::zeros(k.shape());
    let plane = d_in * h * w;
    for (i, (yb, db)) in y.data().chunks(plane).zip(dout.data().chunks(img)).enumerate() {
        im2col(&g, db, &mut cols);
        if let Some(dy) = dy.as_mut() {
            let dyb = &mut dy.data_mut()[i * plane..(i + 1) * plane];
            T::gemm(d_in, rows, n, T::one(), k.data(), false, &cols, false, T::zero(), dyb);
        }
        T::gemm(d_in, n, rows, T::one(), yb, false, &cols, true, T::one(), dk.data_mut());
    }
    Ok((dy, dk))
}
