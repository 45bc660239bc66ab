use alloc::format;
use alloc::vec::Vec;

use super::env::{clamp_pixel, EnvConfig, PartialScan};
use super::Raster;
use crate::{Error, Result};

/// Probes spaced `cfg.spacing` apart along an Archimedean spiral
/// `r = b * phi` around the image center, with `b` chosen so the last probe
/// lies at radius `min(h, w) / 2 - 1`.
pub fn spiral_path(cfg: &EnvConfig) -> Result<Vec<[f32; 2]>> {
    cfg.validate()?;
    let n = cfg.probes();
    let d = cfg.spacing as f64;
    let target = cfg.width.min(cfg.height) as f64 / 2.0 - 1.0;
    if !(target > 0.0) {
        return Err(Error::Config("image too small for a spiral".into()));
    }
    // Outer radius grows monotonically with the pitch.
    let (mut lo, mut hi) = (1e-6f64, target);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let r = spiral_polar(mid, d, n).last().map_or(0.0, |p| p.0);
        if r > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let [cx, cy] = cfg.start();
    Ok(spiral_polar(lo, d, n)
        .into_iter()
        .map(|(r, phi)| {
            [
                (cx as f64 + r * libm::cos(phi)) as f32,
                (cy as f64 + r * libm::sin(phi)) as f32,
            ]
        })
        .collect())
}

/// `n` points of the spiral `r = b * phi`, each a chord `d` from the
/// previous one, starting from the center.
fn spiral_polar(b: f64, d: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let (mut r, mut phi) = (0.0f64, 0.0f64);
    for _ in 0..n {
        // Advance phi until the chord from the current point reaches d.
        let (x0, y0) = (r * libm::cos(phi), r * libm::sin(phi));
        let chord = |p: f64| {
            let rr = b * p;
            libm::hypot(rr * libm::cos(p) - x0, rr * libm::sin(p) - y0)
        };
        let mut step = d / libm::hypot(r, b).max(1e-12);
        while chord(phi + step) < d {
            step *= 2.0;
        }
        let (mut lo, mut hi) = (phi, phi + step);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if chord(mid) < d {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        phi = 0.5 * (lo + hi);
        r = b * phi;
        out.push((r, phi));
    }
    out
}

/// Resample a polyline at arc lengths `k * spacing`, `k = 1..=T * S`.
pub fn resample_polyline(waypoints: &[[f32; 2]], cfg: &EnvConfig) -> Result<Vec<[f32; 2]>> {
    cfg.validate()?;
    if waypoints.len() < 2 {
        return Err(Error::Config(format!(
            "a path needs at least 2 waypoints, got {}",
            waypoints.len()
        )));
    }
    let n = cfg.probes();
    let d = cfg.spacing as f64;
    let seg_len: Vec<f64> = waypoints
        .windows(2)
        .map(|w| libm::hypot((w[1][0] - w[0][0]) as f64, (w[1][1] - w[0][1]) as f64))
        .collect();
    let total: f64 = seg_len.iter().sum();
    let needed = n as f64 * d;
    if total + 1e-4 < needed {
        return Err(Error::Config(format!(
            "path length {total:.3} is shorter than the {needed:.3} needed for {n} probes"
        )));
    }
    let mut out = Vec::with_capacity(n);
    let (mut seg, mut start) = (0usize, 0.0f64);
    for k in 1..=n {
        let s = k as f64 * d;
        while seg + 1 < seg_len.len() && s > start + seg_len[seg] {
            start += seg_len[seg];
            seg += 1;
        }
        let t = if seg_len[seg] > 0.0 {
            ((s - start) / seg_len[seg]).min(1.0)
        } else {
            0.0
        };
        let [a, b] = [waypoints[seg], waypoints[seg + 1]];
        out.push([
            (a[0] as f64 + t * (b[0] - a[0]) as f64) as f32,
            (a[1] as f64 + t * (b[1] - a[1]) as f64) as f32,
        ]);
    }
    Ok(out)
}

/// Partial scan of `image` sampled at fixed probe positions.
pub fn scan_from_positions(image: &Raster, positions: &[[f32; 2]]) -> PartialScan {
    let mut scan = PartialScan::empty(image.width, image.height);
    for &p in positions {
        let (x, y) = clamp_pixel(p, image.width, image.height);
        scan.mark(p, image.get(x, y));
    }
    scan
}
