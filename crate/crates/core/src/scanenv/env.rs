use alloc::format;
use alloc::vec::Vec;

use super::raster::{pixel_index, Raster};
use crate::{Error, Result};

/// Geometry of one scan episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvConfig {
    /// Number of straight path segments per episode.
    pub segments: usize,
    pub samples_per_segment: usize,
    /// Distance between successive probes, in pixels.
    pub spacing: f32,
    pub width: usize,
    pub height: usize,
    /// Step loss added when a segment's nominal probes leave the image.
    pub over_edge_penalty: f32,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            segments: 20,
            samples_per_segment: 20,
            spacing: core::f32::consts::SQRT_2,
            width: 96,
            height: 96,
            over_edge_penalty: 0.1,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 || self.samples_per_segment == 0 {
            return Err(Error::Config("segments and samples per segment must be >= 1".into()));
        }
        if !(self.spacing >= core::f32::consts::SQRT_2) {
            return Err(Error::Config(format!("probe spacing {} is below sqrt(2)", self.spacing)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image extents must be positive".into()));
        }
        Ok(())
    }

    /// Probes in one complete episode.
    pub fn probes(&self) -> usize {
        self.segments * self.samples_per_segment
    }

    pub fn start(&self) -> [f32; 2] {
        [
            (self.width as f32 - 1.0) / 2.0,
            (self.height as f32 - 1.0) / 2.0,
        ]
    }
}

/// One episode: `(a_0, o_1, ..., a_{T-1}, o_T)` plus bookkeeping.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScanHistory {
    pub actions: Vec<[f32; 2]>,
    pub observations: Vec<Vec<f32>>,
    pub over_edge: Vec<bool>,
    /// Nominal (unclamped) probe positions of every segment.
    pub positions: Vec<Vec<[f32; 2]>>,
}

impl ScanHistory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn is_complete(&self, cfg: &EnvConfig) -> bool {
        self.len() == cfg.segments
            && self.observations.len() == cfg.segments
            && self.over_edge.len() == cfg.segments
            && self.positions.len() == cfg.segments
            && self.observations.iter().all(|o| o.len() == cfg.samples_per_segment)
    }
}

/// Sampled values and the binary mask of visited pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialScan {
    pub values: Raster,
    pub mask: Raster,
}

impl PartialScan {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            values: Raster::zeros(width, height),
            mask: Raster::zeros(width, height),
        }
    }

    pub fn coverage(&self) -> usize {
        self.mask.data.iter().filter(|&&m| m != 0.0).count()
    }

    /// Record a probe at `p`, clamped into the image.
    pub(crate) fn mark(&mut self, p: [f32; 2], value: f32) {
        let (x, y) = clamp_pixel(p, self.values.width, self.values.height);
        self.values.set(x, y, value);
        self.mask.set(x, y, 1.0);
    }
}

pub(crate) fn clamp_pixel(p: [f32; 2], width: usize, height: usize) -> (usize, usize) {
    let (x, y) = pixel_index(p);
    (
        x.clamp(0, width as i64 - 1) as usize,
        y.clamp(0, height as i64 - 1) as usize,
    )
}

/// Probe position and history of an episode in progress.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeState {
    pub position: [f32; 2],
    pub step: usize,
    pub history: ScanHistory,
}

impl EpisodeState {
    /// Fresh episode starting at the image center.
    pub fn reset(cfg: &EnvConfig) -> Self {
        Self {
            position: cfg.start(),
            step: 0,
            history: ScanHistory::default(),
        }
    }

    pub fn is_done(&self, cfg: &EnvConfig) -> bool {
        self.step >= cfg.segments
    }

    /// Scan one segment in direction `action`, sampling `image` at the pixel
    /// nearest each of the probes `position + k * spacing * action`,
    /// `k = 1..=samples_per_segment`. Returns the observation and whether
    /// any probe fell outside the image.
    pub fn step(
        &mut self,
        cfg: &EnvConfig,
        image: &Raster,
        action: [f32; 2],
    ) -> Result<(Vec<f32>, bool)> {
        let norm = libm::hypot(action[0] as f64, action[1] as f64);
        if !((norm - 1.0).abs() <= 1e-6) {
            return Err(Error::Contract(format!("action {action:?} is not a unit vector")));
        }
        if self.is_done(cfg) {
            return Err(Error::Usage(format!("episode already has {} segments", cfg.segments)));
        }
        if image.width != cfg.width || image.height != cfg.height {
            return Err(Error::dim(
                "episode_step",
                &[cfg.height, cfg.width],
                &[image.height, image.width],
            ));
        }
        let [x0, y0] = self.position;
        let mut obs = Vec::with_capacity(cfg.samples_per_segment);
        let mut positions = Vec::with_capacity(cfg.samples_per_segment);
        let mut over_edge = false;
        for k in 1..=cfg.samples_per_segment {
            let s = k as f32 * cfg.spacing;
            let p = [x0 + s * action[0], y0 + s * action[1]];
            let (ix, iy) = pixel_index(p);
            if ix < 0 || iy < 0 || ix >= cfg.width as i64 || iy >= cfg.height as i64 {
                over_edge = true;
            }
            let (cx, cy) = clamp_pixel(p, cfg.width, cfg.height);
            obs.push(image.get(cx, cy));
            positions.push(p);
        }
        self.position = *positions.last().unwrap();
        self.step += 1;
        self.history.actions.push(action);
        self.history.observations.push(obs.clone());
        self.history.over_edge.push(over_edge);
        self.history.positions.push(positions);
        Ok((obs, over_edge))
    }
}

/// Partial scan of a complete history: observed values at the clamped pixel
/// of every probe, zero elsewhere.
pub fn rasterize_scan(history: &ScanHistory, cfg: &EnvConfig) -> Result<PartialScan> {
    if !history.is_complete(cfg) {
        return Err(Error::Usage(format!(
            "history has {} of {} segments",
            history.len(),
            cfg.segments
        )));
    }
    let mut scan = PartialScan::empty(cfg.width, cfg.height);
    for (pos, obs) in history.positions.iter().zip(&history.observations) {
        for (&p, &v) in pos.iter().zip(obs) {
            scan.mark(p, v);
        }
    }
    Ok(scan)
}
