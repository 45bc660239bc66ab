use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Raster;
use crate::{Error, Result};

/// A set of equally sized single-channel images.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageDataset {
    pub width: usize,
    pub height: usize,
    pub images: Vec<Raster>,
}

impl ImageDataset {
    pub fn new(width: usize, height: usize, images: Vec<Raster>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::Data("dataset holds no images".into()));
        }
        if let Some(i) = images.iter().position(|r| r.width != width || r.height != height) {
            return Err(Error::dim(
                "dataset",
                &[height, width],
                &[images[i].height, images[i].width],
            ));
        }
        Ok(Self {
            width,
            height,
            images,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Split without shuffling: the first `floor(fraction * n)` images train.
pub fn split_dataset(ds: &ImageDataset, train_fraction: f64) -> Result<(ImageDataset, ImageDataset)> {
    let n = ds.len();
    let cut = libm::floor(train_fraction * n as f64 + 1e-9);
    if !(cut >= 1.0) || cut >= n as f64 {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} leaves an empty split of {n} images"
        )));
    }
    let cut = cut as usize;
    let train = ds.images[..cut].to_vec();
    let test = ds.images[cut..].to_vec();
    Ok((
        ImageDataset::new(ds.width, ds.height, train)?,
        ImageDataset::new(ds.width, ds.height, test)?,
    ))
}

/// Seeded synthetic micrographs: a smooth background, a uniform region,
/// a lattice of atoms, a few large blobs and pixel noise.
pub fn synth_dataset(count: usize, height: usize, width: usize, seed: u64) -> Result<ImageDataset> {
    if count == 0 || height == 0 || width == 0 {
        return Err(Error::Config("synthetic dataset needs count, height and width >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..count).map(|_| synth_image(&mut rng, width, height)).collect();
    ImageDataset::new(width, height, images)
}

struct Blob {
    x: f32,
    y: f32,
    amp: f32,
    inv2s2: f32,
}

fn synth_image(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Raster {
    let (wf, hf) = (width as f32, height as f32);
    let tau = core::f32::consts::TAU;

    let grad_angle = rng.gen_range(0.0..tau);
    let grad_amp = rng.gen_range(0.0..0.3f32);
    let (gx, gy) = (libm::cosf(grad_angle) * grad_amp / wf, libm::sinf(grad_angle) * grad_amp / hf);

    // Half-plane of uniform material where the lattice is absent.
    let cut_angle = rng.gen_range(0.0..tau);
    let (nx, ny) = (libm::cosf(cut_angle), libm::sinf(cut_angle));
    let cut_offset = rng.gen_range(-0.5..0.5f32) * wf.min(hf);
    let region_level = rng.gen_range(-0.5..0.5f32);
    let has_region = rng.gen_bool(0.6);

    let spacing = rng.gen_range(5.0..11.0f32);
    let lat_angle = rng.gen_range(0.0..tau);
    let (ca, sa) = (libm::cosf(lat_angle), libm::sinf(lat_angle));
    let atom_sigma = rng.gen_range(0.8..2.0f32);
    let atom_amp = rng.gen_range(0.5..1.0f32);
    let phase = [rng.gen_range(0.0..1.0f32), rng.gen_range(0.0..1.0f32)];

    let blobs: Vec<Blob> = (0..rng.gen_range(0..=4))
        .map(|_| {
            let s = rng.gen_range(4.0..16.0f32);
            Blob {
                x: rng.gen_range(0.0..wf),
                y: rng.gen_range(0.0..hf),
                amp: rng.gen_range(-0.8..0.8f32),
                inv2s2: 1.0 / (2.0 * s * s),
            }
        })
        .collect();

    let noise = Normal::new(0.0f32, rng.gen_range(0.02..0.1f32)).unwrap();
    let cx = (wf - 1.0) / 2.0;
    let cy = (hf - 1.0) / 2.0;
    let atom_k = 1.0 / (2.0 * atom_sigma * atom_sigma);

    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f32 - cx, y as f32 - cy);
            let mut v = gx * px + gy * py;
            if has_region && px * nx + py * ny > cut_offset {
                v += region_level;
            } else {
                // Distance to the nearest lattice site in rotated coordinates.
                let u = (px * ca + py * sa) / spacing + phase[0];
                let w = (-px * sa + py * ca) / spacing + phase[1];
                let du = (u - libm::roundf(u)) * spacing;
                let dw = (w - libm::roundf(w)) * spacing;
                v += atom_amp * libm::expf(-(du * du + dw * dw) * atom_k);
            }
            for b in &blobs {
                let (dx, dy) = (x as f32 - b.x, y as f32 - b.y);
                v += b.amp * libm::expf(-(dx * dx + dy * dy) * b.inv2s2);
            }
            v += noise.sample(rng);
            data.push(v);
        }
    }
    Raster {
        width,
        height,
        data,
    }
}
