//! WEM1 image datasets: magic `WEM1`, little-endian `u32` count, height and
//! width, then every image as row-major `f32`.

use std::path::Path;

use adascan_core::scanenv::{ImageDataset, Raster};
use anyhow::Context;

use crate::format::{put_f32s, FormatError, Reader};
use crate::fsio::atomic_write;

pub const MAGIC: [u8; 4] = *b"WEM1";

pub fn encode(ds: &ImageDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + ds.len() * ds.width * ds.height * 4);
    out.extend_from_slice(&MAGIC);
    for v in [ds.len(), ds.height, ds.width] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for img in &ds.images {
        put_f32s(&mut out, &img.data);
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ImageDataset, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(FormatError::Invalid {
            offset: 4,
            message: "image count is zero".into(),
        });
    }
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    if height == 0 || width == 0 {
        return Err(FormatError::Invalid {
            offset: 8,
            message: format!("image extent {height}x{width} is empty"),
        });
    }
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let data = r.f32s(height * width)?;
        images.push(Raster { width, height, data });
    }
    r.finish()?;
    Ok(ImageDataset { width, height, images })
}

pub fn load(path: &Path) -> anyhow::Result<ImageDataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode(&bytes).with_context(|| format!("loading dataset {}", path.display()))
}

pub fn save(ds: &ImageDataset, path: &Path) -> anyhow::Result<()> {
    atomic_write(path, &encode(ds))
}
