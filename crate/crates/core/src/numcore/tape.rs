//! Reverse-mode differentiation over a linear record of operations.
//!
//! Every operation appends one node holding its output value. `backward`
//! walks the nodes in exact reverse order and accumulates gradients into the
//! inputs of each node that lies on a path from a `requires_grad` leaf.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use super::conv;
use super::{Real, Tensor};
use crate::{Error, Result};

static NEXT_TAPE_ID: AtomicUsize = AtomicUsize::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    idx: usize,
    tape: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    Train,
    Infer,
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.99;

/// Running per-channel statistics of a batch-normalization layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Real> BatchNormStats<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }
}

enum Op<T> {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, T),
    Reshape(usize),
    AddRowBias(usize, usize),
    AddChannelBias(usize, usize),
    Act(usize, Activation),
    MatMul(usize, usize),
    ConcatCols(Vec<usize>),
    SliceCols { x: usize, start: usize },
    BroadcastRows(usize),
    Conv { x: usize, k: usize, stride: usize },
    ConvT { x: usize, k: usize, stride: usize },
    BatchNorm {
        x: usize,
        scale: usize,
        shift: usize,
        xhat: Vec<T>,
        inv_std: Vec<T>,
        train: bool,
    },
    NormalizeRows { x: usize, norms: Vec<T> },
    Sum(usize),
    Mean(usize),
    Mse { pred: usize, target: Vec<T> },
    RegionMax {
        pred: usize,
        target: Vec<T>,
        region: usize,
        tiles: Vec<(usize, usize)>,
    },
    Lstm {
        ins: [usize; 6],
        gates: Vec<T>,
        tanh_c: Vec<T>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Record of executed operations.
pub struct Tape<T: Real = f32> {
    id: usize,
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by leaf.
pub struct Gradients<T> {
    tape: usize,
    grads: Vec<Option<Tensor<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of the loss w.r.t. `v`; exactly zero when `v` does not
    /// influence the loss.
    pub fn get(&self, v: Var) -> Tensor<T> {
        assert_eq!(v.tape, self.tape, "variable from a different tape");
        match self.grads.get(v.idx) {
            Some(Some(g)) => g.clone(),
            _ => Tensor::zeros(&self.shapes[v.idx]),
        }
    }

    pub fn collect(&self, vars: &[Var]) -> Vec<Tensor<T>> {
        vars.iter().map(|&v| self.get(v)).collect()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: requires_grad,
        });
        Var {
            idx: self.nodes.len() - 1,
            tape: self.id,
        }
    }

    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        assert_eq!(v.tape, self.id, "variable from a different tape");
        &self.nodes[v.idx].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.idx].needs_grad
    }

    fn idx(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.idx >= self.nodes.len() {
            return Err(Error::Usage("variable does not belong to this tape".into()));
        }
        Ok(v.idx)
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[usize]) -> Var {
        let needs_grad = inputs.iter().any(|&i| self.nodes[i].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            idx: self.nodes.len() - 1,
            tape: self.id,
        }
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(usize, usize)> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let (sa, sb) = (self.nodes[ia].value.shape(), self.nodes[ib].value.shape());
        if sa != sb {
            return Err(Error::dim(op, sa, sb));
        }
        Ok((ia, ib))
    }

    fn zip(&mut self, a: usize, b: usize, op: Op<T>, f: impl Fn(T, T) -> T) -> Var {
        let (va, vb) = (&self.nodes[a].value, &self.nodes[b].value);
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(va.shape(), data).unwrap();
        self.push(value, op, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = self.same_shape("add", a, b)?;
        Ok(self.zip(ia, ib, Op::Add(ia, ib), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = self.same_shape("sub", a, b)?;
        Ok(self.zip(ia, ib, Op::Sub(ia, ib), |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = self.same_shape("mul", a, b)?;
        Ok(self.zip(ia, ib, Op::Mul(ia, ib), |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = self.nodes[ia].value.map(|v| v * c);
        Ok(self.push(value, Op::Scale(ia, c), &[ia]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let ia = self.idx(a)?;
        let value = self.nodes[ia].value.clone().reshape(shape)?;
        Ok(self.push(value, Op::Reshape(ia), &[ia]))
    }

    /// `x[m x n] + b[n]` broadcast over rows.
    pub fn add_row_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (ix, ib) = (self.idx(x)?, self.idx(b)?);
        let (xv, bv) = (&self.nodes[ix].value, &self.nodes[ib].value);
        let (_, n) = xv.dims2("add_row_bias")?;
        if bv.len() != n {
            return Err(Error::dim("add_row_bias", xv.shape(), bv.shape()));
        }
        let mut value = xv.clone();
        for row in value.data_mut().chunks_mut(n) {
            for (v, &bb) in row.iter_mut().zip(bv.data()) {
                *v += bb;
            }
        }
        Ok(self.push(value, Op::AddRowBias(ix, ib), &[ix, ib]))
    }

    /// `x[b, c, h, w] + bias[c]` broadcast over batch and space.
    pub fn add_channel_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (ix, ib) = (self.idx(x)?, self.idx(b)?);
        let (xv, bv) = (&self.nodes[ix].value, &self.nodes[ib].value);
        let (_, c, h, w) = xv.dims4("add_channel_bias")?;
        if bv.len() != c {
            return Err(Error::dim("add_channel_bias", xv.shape(), bv.shape()));
        }
        let mut value = xv.clone();
        for (i, plane) in value.data_mut().chunks_mut(h * w).enumerate() {
            let bb = bv.data()[i % c];
            plane.iter_mut().for_each(|v| *v += bb);
        }
        Ok(self.push(value, Op::AddChannelBias(ix, ib), &[ix, ib]))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var> {
        let ix = self.idx(x)?;
        let value = self.nodes[ix].value.map(|v| activate(kind, v));
        Ok(self.push(value, Op::Act(ix, kind), &[ix]))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Relu)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Tanh)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.activation(x, Activation::Sigmoid)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let (av, bv) = (&self.nodes[ia].value, &self.nodes[ib].value);
        let (m, k) = av.dims2("matmul")?;
        let (k2, n) = bv.dims2("matmul")?;
        if k != k2 {
            return Err(Error::dim("matmul", av.shape(), bv.shape()));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(m, k, n, T::one(), av.data(), false, bv.data(), false, T::zero(), &mut out);
        let value = Tensor::new(&[m, n], out)?;
        Ok(self.push(value, Op::MatMul(ia, ib), &[ia, ib]))
    }

    /// Concatenate rank-2 tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let idx = parts.iter().map(|&p| self.idx(p)).collect::<Result<Vec<_>>>()?;
        let Some(&first) = idx.first() else {
            return Err(Error::Usage("concat of zero tensors".into()));
        };
        let (m, _) = self.nodes[first].value.dims2("concat_cols")?;
        let mut widths = Vec::with_capacity(idx.len());
        for &i in &idx {
            let v = &self.nodes[i].value;
            let (r, c) = v.dims2("concat_cols")?;
            if r != m {
                return Err(Error::dim("concat_cols", self.nodes[first].value.shape(), v.shape()));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for r in 0..m {
            for (&i, &c) in idx.iter().zip(&widths) {
                out.extend_from_slice(&self.nodes[i].value.data()[r * c..(r + 1) * c]);
            }
        }
        let value = Tensor::new(&[m, total], out)?;
        Ok(self.push(value, Op::ConcatCols(idx.clone()), &idx))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let ix = self.idx(x)?;
        let xv = &self.nodes[ix].value;
        let (m, n) = xv.dims2("slice_cols")?;
        if start + len > n || len == 0 {
            return Err(Error::dim("slice_cols", xv.shape(), &[start, len]));
        }
        let mut out = Vec::with_capacity(m * len);
        for row in xv.data().chunks(n) {
            out.extend_from_slice(&row[start..start + len]);
        }
        let value = Tensor::new(&[m, len], out)?;
        Ok(self.push(value, Op::SliceCols { x: ix, start }, &[ix]))
    }

    /// Repeat a `[1 x n]` row `m` times.
    pub fn broadcast_rows(&mut self, v: Var, m: usize) -> Result<Var> {
        let iv = self.idx(v)?;
        let vv = &self.nodes[iv].value;
        let (r, n) = vv.dims2("broadcast_rows")?;
        if r != 1 {
            return Err(Error::dim("broadcast_rows", vv.shape(), &[1, n]));
        }
        let value = Tensor::new(&[m, n], vv.data().repeat(m))?;
        Ok(self.push(value, Op::BroadcastRows(iv), &[iv]))
    }

    /// Zero-padded "same" cross-correlation; output extents `ceil(h / stride)`.
    pub fn conv2d(&mut self, x: Var, kernel: Var, stride: usize) -> Result<Var> {
        let (ix, ik) = (self.idx(x)?, self.idx(kernel)?);
        let value = conv::conv2d(&self.nodes[ix].value, &self.nodes[ik].value, stride)?;
        Ok(self.push(value, Op::Conv { x: ix, k: ik, stride }, &[ix, ik]))
    }

    /// Fractionally strided convolution; output extents `stride * h`.
    /// `kernel` is `[c_in, c_out, k, k]`.
    pub fn conv2d_transpose(&mut self, x: Var, kernel: Var, stride: usize) -> Result<Var> {
        let (ix, ik) = (self.idx(x)?, self.idx(kernel)?);
        let value = conv::conv2d_transpose(&self.nodes[ix].value, &self.nodes[ik].value, stride)?;
        Ok(self.push(value, Op::ConvT { x: ix, k: ik, stride }, &[ix, ik]))
    }

    /// Per-channel batch normalization of `[b, c, h, w]`. Train mode
    /// normalizes by batch statistics and folds them into `stats`.
    pub fn batch_norm(
        &mut self,
        x: Var,
        scale: Var,
        shift: Var,
        stats: &mut BatchNormStats<T>,
        mode: NormMode,
    ) -> Result<Var> {
        let (ix, is, ih) = (self.idx(x)?, self.idx(scale)?, self.idx(shift)?);
        let xv = &self.nodes[ix].value;
        let (b, c, h, w) = xv.dims4("batch_norm")?;
        let (sv, hv) = (&self.nodes[is].value, &self.nodes[ih].value);
        if sv.len() != c || hv.len() != c || stats.mean.len() != c {
            return Err(Error::dim("batch_norm", xv.shape(), sv.shape()));
        }
        let train = mode == NormMode::Train;
        if train && b < 2 {
            return Err(Error::Config("batch normalization in train mode needs batch >= 2".into()));
        }
        let hw = h * w;
        let count = T::of((b * hw) as f64);
        let eps = T::of(BN_EPS);
        let momentum = T::of(BN_MOMENTUM);
        let mut inv_std = vec![T::zero(); c];
        let mut shift_by = vec![T::zero(); c];
        for ch in 0..c {
            let planes = || (0..b).flat_map(move |bi| xv.data()[(bi * c + ch) * hw..][..hw].iter());
            let (mean, var) = if train {
                let mean = planes().copied().sum::<T>() / count;
                let var = planes().map(|&v| (v - mean) * (v - mean)).sum::<T>() / count;
                stats.mean[ch] = momentum * stats.mean[ch] + (T::one() - momentum) * mean;
                stats.var[ch] = momentum * stats.var[ch] + (T::one() - momentum) * var;
                (mean, var)
            } else {
                (stats.mean[ch], stats.var[ch])
            };
            inv_std[ch] = T::one() / (var + eps).sqrt();
            shift_by[ch] = mean;
        }
        let mut xhat = xv.data().to_vec();
        let mut out = vec![T::zero(); xhat.len()];
        for (i, (xh, o)) in xhat.chunks_mut(hw).zip(out.chunks_mut(hw)).enumerate() {
            let ch = i % c;
            let (g, s) = (sv.data()[ch], hv.data()[ch]);
            for (a, y) in xh.iter_mut().zip(o.iter_mut()) {
                *a = (*a - shift_by[ch]) * inv_std[ch];
                *y = g * *a + s;
            }
        }
        let value = Tensor::new(xv.shape(), out)?;
        let op = Op::BatchNorm {
            x: ix,
            scale: is,
            shift: ih,
            xhat,
            inv_std,
            train,
        };
        Ok(self.push(value, op, &[ix, is, ih]))
    }

    /// Scale each row of `[m x n]` to unit Euclidean length. Rows with norm
    /// below `1e-8` become the first basis vector and pass no gradient.
    pub fn normalize_rows(&mut self, x: Var) -> Result<Var> {
        let ix = self.idx(x)?;
        let xv = &self.nodes[ix].value;
        let (m, n) = xv.dims2("normalize_rows")?;
        let mut out = vec![T::zero(); m * n];
        let mut norms = vec![T::zero(); m];
        for (r, (row, o)) in xv.data().chunks(n).zip(out.chunks_mut(n)).enumerate() {
            let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm < T::of(1e-8) {
                o[0] = T::one();
            } else {
                norms[r] = norm;
                for (d, &s) in o.iter_mut().zip(row) {
                    *d = s / norm;
                }
            }
        }
        let value = Tensor::new(&[m, n], out)?;
        Ok(self.push(value, Op::NormalizeRows { x: ix, norms }, &[ix]))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let ix = self.idx(x)?;
        let value = Tensor::scalar(self.nodes[ix].value.sum());
        Ok(self.push(value, Op::Sum(ix), &[ix]))
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let ix = self.idx(x)?;
        let xv = &self.nodes[ix].value;
        let value = Tensor::scalar(xv.sum() / T::of(xv.len() as f64));
        Ok(self.push(value, Op::Mean(ix), &[ix]))
    }

    /// Mean squared error against a detached target.
    pub fn mse_loss(&mut self, pred: Var, target: &Tensor<T>) -> Result<Var> {
        let ip = self.idx(pred)?;
        let pv = &self.nodes[ip].value;
        if pv.shape() != target.shape() {
            return Err(Error::dim("mse_loss", pv.shape(), target.shape()));
        }
        let value = Tensor::scalar(super::loss::mse(pv.data(), target.data()));
        let op = Op::Mse {
            pred: ip,
            target: target.data().to_vec(),
        };
        Ok(self.push(value, op, &[ip]))
    }

    /// MSE between the horizontal/vertical Sobel responses of `pred` and
    /// `target`. Accepts `[h, w]` or `[b, 1, h, w]`.
    pub fn sobel_loss(&mut self, pred: Var, target: &Tensor<T>) -> Result<Var> {
        let ip = self.idx(pred)?;
        let shape = self.nodes[ip].value.shape().to_vec();
        if shape != target.shape() {
            return Err(Error::dim("sobel_loss", &shape, target.shape()));
        }
        let batched = super::loss::as_batched_image(&shape)?;
        let p = self.reshape(pred, &batched)?;
        let kernel = self.constant(super::loss::sobel_kernel());
        let sp = self.conv2d(p, kernel, 1)?;
        let st = super::loss::sobel(&target.clone().reshape(&batched)?)?;
        self.mse_loss(sp, &st)
    }

    /// Mean over the batch of the largest per-tile MSE, tiles being
    /// non-overlapping `region x region` squares (partial tiles dropped).
    /// The last two extents are spatial; leading extents index the batch.
    pub fn region_max_mse(&mut self, pred: Var, target: &Tensor<T>, region: usize) -> Result<Var> {
        let ip = self.idx(pred)?;
        let pv = &self.nodes[ip].value;
        if pv.shape() != target.shape() {
            return Err(Error::dim("region_max_mse", pv.shape(), target.shape()));
        }
        let (losses, tiles) = super::loss::region_max(pv, target, region)?;
        let value = Tensor::scalar(losses.iter().copied().sum::<T>() / T::of(losses.len() as f64));
        let op = Op::RegionMax {
            pred: ip,
            target: target.data().to_vec(),
            region,
            tiles,
        };
        Ok(self.push(value, op, &[ip]))
    }

    /// One LSTM step with gate order (input, forget, candidate, output).
    ///
    /// `x: [b, i]`, `h, c: [b, n]`, `wx: [i, 4n]`, `wh: [n, 4n]`, `bias: [4n]`.
    pub fn lstm_cell(
        &mut self,
        x: Var,
        h: Var,
        c: Var,
        wx: Var,
        wh: Var,
        bias: Var,
    ) -> Result<(Var, Var)> {
        let ins = [
            self.idx(x)?,
            self.idx(h)?,
            self.idx(c)?,
            self.idx(wx)?,
            self.idx(wh)?,
            self.idx(bias)?,
        ];
        let v = |i: usize| &self.nodes[ins[i]].value;
        let (b, ni) = v(0).dims2("lstm_cell")?;
        let (bh, n) = v(1).dims2("lstm_cell")?;
        let shape_ok = bh == b
            && v(2).shape() == [b, n]
            && v(3).shape() == [ni, 4 * n]
            && v(4).shape() == [n, 4 * n]
            && v(5).len() == 4 * n;
        if !shape_ok {
            return Err(Error::dim("lstm_cell", v(0).shape(), v(3).shape()));
        }
        let mut gates = v(5).data().repeat(b);
        T::gemm(b, ni, 4 * n, T::one(), v(0).data(), false, v(3).data(), false, T::one(), &mut gates);
        T::gemm(b, n, 4 * n, T::one(), v(1).data(), false, v(4).data(), false, T::one(), &mut gates);
        let mut out = vec![T::zero(); b * 2 * n];
        let mut tanh_c = vec![T::zero(); b * n];
        let c_prev = v(2).data();
        for r in 0..b {
            let g = &mut gates[r * 4 * n..(r + 1) * 4 * n];
            for (j, gv) in g.iter_mut().enumerate() {
                *gv = if j / n == 2 {
                    gv.tanh()
                } else {
                    activate(Activation::Sigmoid, *gv)
                };
            }
            for j in 0..n {
                let (ig, fg, cg, og) = (g[j], g[n + j], g[2 * n + j], g[3 * n + j]);
                let c_new = fg * c_prev[r * n + j] + ig * cg;
                let tc = c_new.tanh();
                tanh_c[r * n + j] = tc;
                out[r * 2 * n + j] = og * tc;
                out[r * 2 * n + n + j] = c_new;
            }
        }
        let value = Tensor::new(&[b, 2 * n], out)?;
        let both = self.push(value, Op::Lstm { ins, gates, tanh_c }, &ins);
        Ok((self.slice_cols(both, 0, n)?, self.slice_cols(both, n, n)?))
    }

    /// Reverse-mode gradients of the scalar `loss` w.r.t. every leaf.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let il = self.idx(loss).map_err(|_| Error::Usage("loss is not on this tape".into()))?;
        if self.nodes[il].value.len() != 1 {
            return Err(Error::Usage(format!(
                "loss must be a scalar, got shape {:?}",
                self.nodes[il].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..=il).map(|_| None).collect();
        grads[il] = Some(Tensor::full(self.nodes[il].value.shape(), T::one()));
        for i in (0..=il).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop(i, &g, &mut grads)?;
        }
        Ok(Gradients {
            tape: self.id,
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], i: usize, g: Tensor<T>) {
        if !self.nodes[i].needs_grad {
            return;
        }
        match &mut grads[i] {
            Some(acc) => acc.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn wants(&self, i: usize) -> bool {
        self.nodes[i].needs_grad
    }

    fn backprop(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let node = &self.nodes[i];
        let val = |j: usize| &self.nodes[j].value;
        let gd = g.data();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    let d = gd.iter().zip(val(*b).data()).map(|(&x, &y)| x * y).collect();
                    self.accumulate(grads, *a, Tensor::new(g.shape(), d)?);
                }
                if self.wants(*b) {
                    let d = gd.iter().zip(val(*a).data()).map(|(&x, &y)| x * y).collect();
                    self.accumulate(grads, *b, Tensor::new(g.shape(), d)?);
                }
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, g.map(|v| v * *c)),
            Op::Reshape(a) => {
                let d = g.clone().reshape(val(*a).shape())?;
                self.accumulate(grads, *a, d);
            }
            Op::AddRowBias(x, b) => {
                self.accumulate(grads, *x, g.clone());
                if self.wants(*b) {
                    let n = val(*b).len();
                    let mut db = vec![T::zero(); n];
                    for row in gd.chunks(n) {
                        db.iter_mut().zip(row).for_each(|(d, &v)| *d += v);
                    }
                    self.accumulate(grads, *b, Tensor::new(val(*b).shape(), db)?);
                }
            }
            Op::AddChannelBias(x, b) => {
                self.accumulate(grads, *x, g.clone());
                if self.wants(*b) {
                    let (_, c, h, w) = g.dims4("add_channel_bias")?;
                    let mut db = vec![T::zero(); c];
                    for (p, plane) in gd.chunks(h * w).enumerate() {
                        db[p % c] += plane.iter().copied().sum::<T>();
                    }
                    self.accumulate(grads, *b, Tensor::new(val(*b).shape(), db)?);
                }
            }
            Op::Act(x, kind) => {
                let y = node.value.data();
                let d = gd
                    .iter()
                    .zip(y)
                    .map(|(&gv, &yv)| gv * activation_grad(*kind, yv))
                    .collect();
                self.accumulate(grads, *x, Tensor::new(g.shape(), d)?);
            }
            Op::MatMul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let (m, k) = av.dims2("matmul")?;
                let (_, n) = bv.dims2("matmul")?;
                if self.wants(*a) {
                    let mut da = vec![T::zero(); m * k];
                    T::gemm(m, n, k, T::one(), gd, false, bv.data(), true, T::zero(), &mut da);
                    self.accumulate(grads, *a, Tensor::new(&[m, k], da)?);
                }
                if self.wants(*b) {
                    let mut db = vec![T::zero(); k * n];
                    T::gemm(k, m, n, T::one(), av.data(), true, gd, false, T::zero(), &mut db);
                    self.accumulate(grads, *b, Tensor::new(&[k, n], db)?);
                }
            }
            Op::ConcatCols(parts) => {
                let (m, total) = g.dims2("concat_cols")?;
                let mut offset = 0;
                for &p in parts {
                    let (_, c) = val(p).dims2("concat_cols")?;
                    if self.wants(p) {
                        let mut d = Vec::with_capacity(m * c);
                        for row in gd.chunks(total) {
                            d.extend_from_slice(&row[offset..offset + c]);
                        }
                        self.accumulate(grads, p, Tensor::new(&[m, c], d)?);
                    }
                    offset += c;
                }
            }
            Op::SliceCols { x, start } => {
                let (m, n) = val(*x).dims2("slice_cols")?;
                let len = g.shape()[1];
                let mut d = vec![T::zero(); m * n];
                for (row, src) in d.chunks_mut(n).zip(gd.chunks(len)) {
                    row[*start..*start + len].copy_from_slice(src);
                }
                self.accumulate(grads, *x, Tensor::new(&[m, n], d)?);
            }
            Op::BroadcastRows(v) => {
                let n = val(*v).len();
                let mut d = vec![T::zero(); n];
                for row in gd.chunks(n) {
                    d.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
                }
                self.accumulate(grads, *v, Tensor::new(val(*v).shape(), d)?);
            }
            Op::Conv { x, k, stride } => {
                let (dx, dk) = conv::conv2d_backward(val(*x), val(*k), *stride, g, self.wants(*x))?;
                if let Some(dx) = dx {
                    self.accumulate(grads, *x, dx);
                }
                self.accumulate(grads, *k, dk);
            }
            Op::ConvT { x, k, stride } => {
                let (dx, dk) =
                    conv::conv2d_transpose_backward(val(*x), val(*k), *stride, g, self.wants(*x))?;
                if let Some(dx) = dx {
                    self.accumulate(grads, *x, dx);
                }
                self.accumulate(grads, *k, dk);
            }
            Op::BatchNorm {
                x,
                scale,
                shift,
                xhat,
                inv_std,
                train,
            } => {
                let (b, c, h, w) = g.dims4("batch_norm")?;
                let hw = h * w;
                let sv = val(*scale).data();
                let mut dscale = vec![T::zero(); c];
                let mut dshift = vec![T::zero(); c];
                for (p, (gp, xp)) in gd.chunks(hw).zip(xhat.chunks(hw)).enumerate() {
                    let ch = p % c;
                    for (&gv, &xv) in gp.iter().zip(xp) {
                        dshift[ch] += gv;
                        dscale[ch] += gv * xv;
                    }
                }
                if self.wants(*x) {
                    let mut dx = vec![T::zero(); gd.len()];
                    let count = T::of((b * hw) as f64);
                    for (p, ((gp, xp), dp)) in
                        gd.chunks(hw).zip(xhat.chunks(hw)).zip(dx.chunks_mut(hw)).enumerate()
                    {
                        let ch = p % c;
                        let k = sv[ch] * inv_std[ch];
                        for ((&gv, &xv), d) in gp.iter().zip(xp).zip(dp.iter_mut()) {
                            *d = if *train {
                                k * (gv - dshift[ch] / count - xv * dscale[ch] / count)
                            } else {
                                k * gv
                            };
                        }
                    }
                    self.accumulate(grads, *x, Tensor::new(g.shape(), dx)?);
                }
                self.accumulate(grads, *scale, Tensor::new(val(*scale).shape(), dscale)?);
                self.accumulate(grads, *shift, Tensor::new(val(*shift).shape(), dshift)?);
            }
            Op::NormalizeRows { x, norms } => {
                let (m, n) = g.dims2("normalize_rows")?;
                let y = node.value.data();
                let mut d = vec![T::zero(); m * n];
                for r in 0..m {
                    if norms[r] == T::zero() {
                        continue;
                    }
                    let (yr, gr) = (&y[r * n..(r + 1) * n], &gd[r * n..(r + 1) * n]);
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    for j in 0..n {
                        d[r * n + j] = (gr[j] - yr[j] * dot) / norms[r];
                    }
                }
                self.accumulate(grads, *x, Tensor::new(&[m, n], d)?);
            }
            Op::Sum(x) => {
                self.accumulate(grads, *x, Tensor::full(val(*x).shape(), gd[0]));
            }
            Op::Mean(x) => {
                let n = T::of(val(*x).len() as f64);
                self.accumulate(grads, *x, Tensor::full(val(*x).shape(), gd[0] / n));
            }
            Op::Mse { pred, target } => {
                let pv = val(*pred);
                let k = gd[0] * T::of(2.0) / T::of(pv.len() as f64);
                let d = pv.data().iter().zip(target).map(|(&p, &t)| k * (p - t)).collect();
                self.accumulate(grads, *pred, Tensor::new(pv.shape(), d)?);
            }
            Op::RegionMax {
                pred,
                target,
                region,
                tiles,
            } => {
                let pv = val(*pred);
                let shape = pv.shape();
                let (h, w) = (shape[shape.len() - 2], shape[shape.len() - 1]);
                let k = gd[0] * T::of(2.0)
                    / T::of((region * region) as f64)
                    / T::of(tiles.len() as f64);
                let mut d = vec![T::zero(); pv.len()];
                for (s, &(ty, tx)) in tiles.iter().enumerate() {
                    for y in ty * region..(ty + 1) * region {
                        for x in tx * region..(tx + 1) * region {
                            let at = s * h * w + y * w + x;
                            d[at] = k * (pv.data()[at] - target[at]);
                        }
                    }
                }
                self.accumulate(grads, *pred, Tensor::new(shape, d)?);
            }
            Op::Lstm { ins, gates, tanh_c } => {
                self.lstm_backward(ins, gates, tanh_c, gd, grads)?;
            }
        }
        Ok(())
    }

    fn lstm_backward(
        &self,
        ins: &[usize; 6],
        gates: &[T],
        tanh_c: &[T],
        gd: &[T],
        grads: &mut [Option<Tensor<T>>],
    ) -> Result<()> {
        let val = |j: usize| &self.nodes[ins[j]].value;
        let (b, ni) = val(0).dims2("lstm_cell")?;
        let (_, n) = val(1).dims2("lstm_cell")?;
        let c_prev = val(2).data();
        let one = T::one();
        let mut dpre = vec![T::zero(); b * 4 * n];
        let mut dc_prev = vec![T::zero(); b * n];
        for r in 0..b {
            let gt = &gates[r * 4 * n..(r + 1) * 4 * n];
            let dp = &mut dpre[r * 4 * n..(r + 1) * 4 * n];
            for j in 0..n {
                let (ig, fg, cg, og) = (gt[j], gt[n + j], gt[2 * n + j], gt[3 * n + j]);
                let tc = tanh_c[r * n + j];
                let dh = gd[r * 2 * n + j];
                let dc = gd[r * 2 * n + n + j] + dh * og * (one - tc * tc);
                dp[j] = dc * cg * ig * (one - ig);
                dp[n + j] = dc * c_prev[r * n + j] * fg * (one - fg);
                dp[2 * n + j] = dc * ig * (one - cg * cg);
                dp[3 * n + j] = dh * tc * og * (one - og);
                dc_prev[r * n + j] = dc * fg;
            }
        }
        let n4 = 4 * n;
        if self.wants(ins[0]) {
            let mut dx = vec![T::zero(); b * ni];
            T::gemm(b, n4, ni, one, &dpre, false, val(3).data(), true, T::zero(), &mut dx);
            self.accumulate(grads, ins[0], Tensor::new(&[b, ni], dx)?);
        }
        if self.wants(ins[1]) {
            let mut dh = vec![T::zero(); b * n];
            T::gemm(b, n4, n, one, &dpre, false, val(4).data(), true, T::zero(), &mut dh);
            self.accumulate(grads, ins[1], Tensor::new(&[b, n], dh)?);
        }
        self.accumulate(grads, ins[2], Tensor::new(&[b, n], dc_prev)?);
        if self.wants(ins[3]) {
            let mut dw = vec![T::zero(); ni * n4];
            T::gemm(ni, b, n4, one, val(0).data(), true, &dpre, false, T::zero(), &mut dw);
            self.accumulate(grads, ins[3], Tensor::new(&[ni, n4], dw)?);
        }
        if self.wants(ins[4]) {
            let mut dw = vec![T::zero(); n * n4];
            T::gemm(n, b, n4, one, val(1).data(), true, &dpre, false, T::zero(), &mut dw);
            self.accumulate(grads, ins[4], Tensor::new(&[n, n4], dw)?);
        }
        if self.wants(ins[5]) {
            let mut db = vec![T::zero(); n4];
            for row in dpre.chunks(n4) {
                db.iter_mut().zip(row).for_each(|(d, &v)| *d += v);
            }
            self.accumulate(grads, ins[5], Tensor::new(val(5).shape(), db)?);
        }
        Ok(())
    }
}

#[inline]
fn activate<T: Real>(kind: Activation, v: T) -> T {
    match kind {
        Activation::Relu => v.max(T::zero()),
        Activation::Tanh => v.tanh(),
        Activation::Sigmoid => T::one() / (T::one() + (-v).exp()),
    }
}

/// Derivative expressed through the activation's output `y`.
#[inline]
fn activation_grad<T: Real>(kind: Activation, y: T) -> T {
    match kind {
        Activation::Relu => {
            if y > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        }
        Activation::Tanh => T::one() - y * y,
        Activation::Sigmoid => y * (T::one() - y),
    }
}
