use alloc::format;

use super::Raster;
use crate::{Error, Result};

/// Blur applied to generator targets.
pub const BLUR_SIGMA: f64 = 2.5;
pub const BLUR_SIZE: usize = 5;

/// A normalized image and its blurred training target.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedImage {
    /// Sampling source, linearly mapped onto [-1, 1].
    pub raw_norm: Raster,
    pub target_blur: Raster,
}

/// Normalized `BLUR_SIZE x BLUR_SIZE` Gaussian, row-major.
pub fn gaussian_kernel() -> [f32; BLUR_SIZE * BLUR_SIZE] {
    let r = (BLUR_SIZE / 2) as i64;
    let mut w = [0f64; BLUR_SIZE * BLUR_SIZE];
    for (i, v) in w.iter_mut().enumerate() {
        let dy = (i / BLUR_SIZE) as i64 - r;
        let dx = (i % BLUR_SIZE) as i64 - r;
        *v = libm::exp(-((dx * dx + dy * dy) as f64) / (2.0 * BLUR_SIGMA * BLUR_SIGMA));
    }
    let total: f64 = w.iter().sum();
    w.map(|v| (v / total) as f32)
}

pub fn preprocess(image: &Raster) -> Result<ProcessedImage> {
    if let Some(i) = image.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite pixel at ({}, {})",
            i % image.width,
            i / image.width
        )));
    }
    let (lo, hi) = image
        .data
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut raw_norm = Raster::zeros(image.width, image.height);
    if hi > lo {
        let (lo, span) = (lo as f64, hi as f64 - lo as f64);
        for (o, &v) in raw_norm.data.iter_mut().zip(&image.data) {
            *o = (2.0 * (v as f64 - lo) / span - 1.0) as f32;
        }
    }
    let target_blur = blur(&raw_norm);
    Ok(ProcessedImage {
        raw_norm,
        target_blur,
    })
}

fn blur(src: &Raster) -> Raster {
    let k = gaussian_kernel();
    let r = (BLUR_SIZE / 2) as i64;
    let (w, h) = (src.width as i64, src.height as i64);
    let mut out = Raster::zeros(src.width, src.height);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for ky in 0..BLUR_SIZE as i64 {
                let sy = y + ky - r;
                if sy < 0 || sy >= h {
                    continue;
                }
                for kx in 0..BLUR_SIZE as i64 {
                    let sx = x + kx - r;
                    if sx >= 0 && sx < w {
                        acc += k[(ky * BLUR_SIZE as i64 + kx) as usize]
                            * src.get(sx as usize, sy as usize);
                    }
                }
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}
