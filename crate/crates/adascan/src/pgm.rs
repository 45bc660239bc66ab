//! Binary greymap (P5) rendering of rasters in [-1, 1].

use adascan_core::scanenv::{PartialScan, Raster};

/// `round((v + 1) / 2 * 255)` clamped to a byte; NaN maps to 0.
pub fn to_byte(v: f32) -> u8 {
    let b = ((v as f64 + 1.0) / 2.0 * 255.0).round();
    if b.is_nan() {
        0
    } else {
        b.clamp(0.0, 255.0) as u8
    }
}

pub fn encode(r: &Raster) -> Vec<u8> {
    encode_bytes(r.width, r.height, r.data.iter().map(|&v| to_byte(v)))
}

/// Sampled values where the mask is set, byte 0 elsewhere.
pub fn encode_scan(s: &PartialScan) -> Vec<u8> {
    let v = &s.values;
    let bytes = v
        .data
        .iter()
        .zip(&s.mask.data)
        .map(|(&x, &m)| if m != 0.0 { to_byte(x) } else { 0 });
    encode_bytes(v.width, v.height, bytes)
}

fn encode_bytes(width: usize, height: usize, pixels: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}
