use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::params::{xavier_uniform, ParamSet};
use crate::numcore::{BatchNormStats, NormMode, Real, Tape, Tensor, Var};
use crate::scanenv::PartialScan;
use crate::{Error, Result};

pub const KERNEL: usize = 3;
/// Spatial extents must be divisible by the encoder's total stride.
pub const TOTAL_STRIDE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub width: usize,
    pub height: usize,
    /// Output channels of the three encoder convolutions.
    pub channels: [usize; 3],
    pub residual_blocks: usize,
}

impl GeneratorConfig {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            channels: [32, 64, 128],
            residual_blocks: 4,
        }
    }

    /// Reduced network sized for single-core training runs.
    pub fn desk(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            channels: [8, 16, 32],
            residual_blocks: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width % TOTAL_STRIDE != 0 || self.height % TOTAL_STRIDE != 0 || self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!(
                "generator extents {}x{} must be positive multiples of {TOTAL_STRIDE}",
                self.height, self.width
            )));
        }
        if self.channels.contains(&0) {
            return Err(Error::Config("generator channel counts must be positive".into()));
        }
        Ok(())
    }

    fn layers(&self) -> Vec<Layer> {
        let [a, b, c] = self.channels;
        let mut out = alloc::vec![
            Layer::conv(2, a, 2),
            Layer::conv(a, b, 2),
            Layer::conv(b, c, 2),
        ];
        for _ in 0..self.residual_blocks * 3 {
            out.push(Layer::conv(c, c, 1));
        }
        out.push(Layer::deconv(c, b));
        out.push(Layer::deconv(b, a));
        out.push(Layer::deconv(a, a));
        out
    }
}

#[derive(Clone, Copy, Debug)]
struct Layer {
    cin: usize,
    cout: usize,
    stride: usize,
    transpose: bool,
}

impl Layer {
    fn conv(cin: usize, cout: usize, stride: usize) -> Self {
        Self {
            cin,
            cout,
            stride,
            transpose: false,
        }
    }

    fn deconv(cin: usize, cout: usize) -> Self {
        Self {
            cin,
            cout,
            stride: 2,
            transpose: true,
        }
    }
}

/// Encoder-residual-decoder completion network. Every convolution is
/// followed by ReLU then batch normalization; residual sums enter between the
/// activation and the normalization of each block's last convolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator<T = f32> {
    pub config: GeneratorConfig,
    pub params: ParamSet<T>,
    pub norms: Vec<BatchNormStats<T>>,
}

impl<T: Real> Generator<T> {
    pub fn new(config: GeneratorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        let mut norms = Vec::new();
        for (i, l) in config.layers().iter().enumerate() {
            let shape = if l.transpose {
                [l.cin, l.cout, KERNEL, KERNEL]
            } else {
                [l.cout, l.cin, KERNEL, KERNEL]
            };
            params.push(format!("layer{i}.w"), xavier_uniform(&shape, rng));
            params.push(format!("layer{i}.b"), Tensor::zeros(&[l.cout]));
            params.push(format!("layer{i}.bn_scale"), Tensor::full(&[l.cout], T::one()));
            params.push(format!("layer{i}.bn_shift"), Tensor::zeros(&[l.cout]));
            norms.push(BatchNormStats::new(l.cout));
        }
        let c = config.channels[0];
        params.push("head.w", xavier_uniform(&[1, c, KERNEL, KERNEL], rng));
        params.push("head.b", Tensor::zeros(&[1]));
        Ok(Self {
            config,
            params,
            norms,
        })
    }

    pub fn cast<U: Real>(&self) -> Generator<U> {
        Generator {
            config: self.config,
            params: self.params.cast(),
            norms: self
                .norms
                .iter()
                .map(|s| BatchNormStats {
                    mean: s.mean.iter().map(|&v| U::of(v.f64())).collect(),
                    var: s.var.iter().map(|&v| U::of(v.f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn bind(&self, tape: &mut Tape<T>, trainable: bool) -> Vec<Var> {
        self.params.bind(tape, trainable)
    }

    /// Two-channel `(values, mask)` input batch.
    pub fn input(&self, scans: &[&PartialScan]) -> Result<Tensor<T>> {
        let (w, h) = (self.config.width, self.config.height);
        let mut data = Vec::with_capacity(scans.len() * 2 * w * h);
        for s in scans {
            if s.values.width != w || s.values.height != h {
                return Err(Error::dim("generator_input", &[h, w], &[s.values.height, s.values.width]));
            }
            data.extend(s.values.data.iter().map(|&v| T::of(v as f64)));
            data.extend(s.mask.data.iter().map(|&v| T::of(v as f64)));
        }
        if scans.is_empty() {
            return Err(Error::Usage("generator input needs at least one scan".into()));
        }
        Tensor::new(&[scans.len(), 2, h, w], data)
    }

    /// `x: [b, 2, h, w]` to `[b, 1, h, w]`. Train mode folds the batch
    /// statistics into `self.norms`.
    pub fn forward(&mut self, tape: &mut Tape<T>, vars: &[Var], x: Var, mode: NormMode) -> Result<Var> {
        let (w, h) = (self.config.width, self.config.height);
        let shape = tape.value(x).shape().to_vec();
        if shape.len() != 4 || shape[1] != 2 || shape[2] != h || shape[3] != w {
            return Err(Error::dim("generator", &[0, 2, h, w], &shape));
        }
        let layers = self.config.layers();
        let mut layer = |tape: &mut Tape<T>, i: usize, x: Var, skip: Option<Var>| -> Result<Var> {
            let l = layers[i];
            let p = &vars[4 * i..4 * i + 4];
            let y = if l.transpose {
                tape.conv2d_transpose(x, p[0], l.stride)?
            } else {
                tape.conv2d(x, p[0], l.stride)?
            };
            let y = tape.add_channel_bias(y, p[1])?;
            let mut y = tape.relu(y)?;
            if let Some(s) = skip {
                y = tape.add(y, s)?;
            }
            tape.batch_norm(y, p[2], p[3], &mut self.norms[i], mode)
        };
        let mut y = x;
        for i in 0..3 {
            y = layer(tape, i, y, None)?;
        }
        for b in 0..self.config.residual_blocks {
            let base = 3 + 3 * b;
            let h1 = layer(tape, base, y, None)?;
            let h2 = layer(tape, base + 1, h1, None)?;
            y = layer(tape, base + 2, h2, Some(y))?;
        }
        let dec = 3 + 3 * self.config.residual_blocks;
        for i in dec..dec + 3 {
            y = layer(tape, i, y, None)?;
        }
        let n = vars.len();
        let out = tape.conv2d(y, vars[n - 2], 1)?;
        tape.add_channel_bias(out, vars[n - 1])
    }

    /// Inference-mode completion of a batch of scans.
    pub fn complete(&mut self, scans: &[&PartialScan]) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape, false);
        let x = tape.constant(self.input(scans)?);
        let y = self.forward(&mut tape, &vars, x, NormMode::Infer)?;
        Ok(tape.value(y).clone())
    }

    /// Multiply-accumulate count of one forward pass on one image.
    pub fn macs(&self) -> usize {
        let (mut h, mut w) = (self.config.height, self.config.width);
        let k2 = KERNEL * KERNEL;
        let mut total = 0;
        for l in self.config.layers() {
            if l.transpose {
                h *= l.stride;
                w *= l.stride;
            } else {
                h /= l.stride;
                w /= l.stride;
            }
            total += l.cin * l.cout * k2 * h * w;
        }
        total + self.config.channels[0] * k2 * h * w
    }
}
