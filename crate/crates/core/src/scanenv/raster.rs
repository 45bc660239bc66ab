use alloc::vec;
use alloc::vec::Vec;

use super::PartialScan;
use crate::{Error, Result};

/// Single-channel `height x width` image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Raster {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height || data.is_empty() {
            return Err(Error::dim("raster", &[height, width], &[data.len()]));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    /// Apply element `index` (0..8) of the dihedral group of the square.
    pub fn dihedral(&self, index: usize) -> Result<Raster> {
        check_dihedral(self, index)?;
        let n = self.width;
        let mut out = Raster::zeros(n, n);
        for y in 0..n {
            for x in 0..n {
                let (tx, ty) = dihedral_index(index, n, x, y);
                out.set(tx, ty, self.get(x, y));
            }
        }
        Ok(out)
    }
}

fn check_dihedral(r: &Raster, index: usize) -> Result<()> {
    if !r.is_square() {
        return Err(Error::Config(alloc::format!(
            "dihedral augmentation needs a square raster, got {}x{}",
            r.height,
            r.width
        )));
    }
    if index >= 8 {
        return Err(Error::Config(alloc::format!("dihedral index {index} is not in 0..8")));
    }
    Ok(())
}

/// Nearest pixel of a continuous position: `floor(v + 0.5)` per axis.
#[inline]
pub fn pixel_index(p: [f32; 2]) -> (i64, i64) {
    (
        libm::floorf(p[0] + 0.5) as i64,
        libm::floorf(p[1] + 0.5) as i64,
    )
}

/// Image of the point `(x, y)` under dihedral element `index` on an `n x n`
/// grid whose pixel centers span `0..=n-1`.
///
/// 0 identity, 1-3 rotations by 90/180/270 degrees, 4 mirror in x,
/// 5 mirror in y, 6 transpose, 7 anti-transpose.
pub fn dihedral_point(index: usize, n: usize, x: f32, y: f32) -> (f32, f32) {
    let m = (n - 1) as f32;
    match index {
        0 => (x, y),
        1 => (y, m - x),
        2 => (m - x, m - y),
        3 => (m - y, x),
        4 => (m - x, y),
        5 => (x, m - y),
        6 => (y, x),
        _ => (m - y, m - x),
    }
}

fn dihedral_index(index: usize, n: usize, x: usize, y: usize) -> (usize, usize) {
    let m = n - 1;
    match index {
        0 => (x, y),
        1 => (y, m - x),
        2 => (m - x, m - y),
        3 => (m - y, x),
        4 => (m - x, y),
        5 => (x, m - y),
        6 => (y, x),
        _ => (m - y, m - x),
    }
}

/// Apply the same dihedral element to a partial scan and its target.
pub fn augment_dihedral(
    scan: &PartialScan,
    target: &Raster,
    index: usize,
) -> Result<(PartialScan, Raster)> {
    check_dihedral(target, index)?;
    if scan.values.width != target.width || scan.values.height != target.height {
        return Err(Error::dim(
            "augment_dihedral",
            &[scan.values.height, scan.values.width],
            &[target.height, target.width],
        ));
    }
    let scan = PartialScan {
        values: scan.values.dihedral(index)?,
        mask: scan.mask.dihedral(index)?,
    };
    Ok((scan, target.dihedral(index)?))
}
