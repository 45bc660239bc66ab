use alloc::vec;
use alloc::vec::Vec;

use crate::agents::{assemble_input, Generator, RecurrentNet};
use crate::numcore::Tensor;
use crate::scanenv::{rasterize_scan, scan_from_positions, EnvConfig, EpisodeState, PartialScan, Raster, ScanHistory};
use crate::{Error, Result};

/// Images per generator batch during evaluation.
pub const EVAL_CHUNK: usize = 32;

/// Mean and (population) standard deviation of per-image errors.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub per_image: Vec<f64>,
}

impl EvalReport {
    pub fn from_errors(per_image: Vec<f64>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::Usage("evaluation needs at least one image".into()));
        }
        let n = per_image.len() as f64;
        let mean = per_image.iter().sum::<f64>() / n;
        let var = per_image.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: libm::sqrt(var),
            count: per_image.len(),
            per_image,
        })
    }
}

/// Noise-free episodes of `actor` on every image, stepped as one batch.
pub fn policy_rollouts(actor: &RecurrentNet, env: &EnvConfig, images: &[&Raster]) -> Result<Vec<ScanHistory>> {
    let b = images.len();
    if b == 0 {
        return Ok(Vec::new());
    }
    let s = env.samples_per_segment;
    let mut states: Vec<EpisodeState> = (0..b).map(|_| EpisodeState::reset(env)).collect();
    let mut hidden = actor.initial_values(b);
    let mut obs = vec![0f32; b * s];
    let mut prev = vec![0f32; b * 2];
    for _ in 0..env.segments {
        let x = assemble_input(&[&obs, &prev], b)?;
        let (mu, next) = actor.step_values(&hidden, &x)?;
        hidden = next;
        for (i, st) in states.iter_mut().enumerate() {
            let a = [mu.data()[2 * i], mu.data()[2 * i + 1]];
            let (o, _) = st.step(env, images[i], a)?;
            obs[i * s..(i + 1) * s].copy_from_slice(&o);
            prev[2 * i..2 * i + 2].copy_from_slice(&a);
        }
    }
    Ok(states.into_iter().map(|st| st.history).collect())
}

pub fn adaptive_scans(actor: &RecurrentNet, env: &EnvConfig, images: &[&Raster]) -> Result<Vec<PartialScan>> {
    policy_rollouts(actor, env, images)?
        .iter()
        .map(|h| rasterize_scan(h, env))
        .collect()
}

pub fn static_scans(images: &[&Raster], positions: &[[f32; 2]]) -> Vec<PartialScan> {
    images.iter().map(|img| scan_from_positions(img, positions)).collect()
}

/// Per-image MSE of inference-mode completions against `targets`.
pub fn completion_errors(generator: &mut Generator, scans: &[PartialScan], targets: &[&Raster]) -> Result<Vec<f64>> {
    if scans.len() != targets.len() {
        return Err(Error::dim("completion_errors", &[scans.len()], &[targets.len()]));
    }
    let mut out = Vec::with_capacity(scans.len());
    for (sc, tg) in scans.chunks(EVAL_CHUNK).zip(targets.chunks(EVAL_CHUNK)) {
        let refs: Vec<&PartialScan> = sc.iter().collect();
        let pred = generator.complete(&refs)?;
        out.extend(per_image_mse(&pred, tg));
    }
    Ok(out)
}

fn per_image_mse(pred: &Tensor, targets: &[&Raster]) -> Vec<f64> {
    let hw = pred.len() / targets.len();
    pred.data()
        .chunks(hw)
        .zip(targets)
        .map(|(p, t)| {
            p.iter()
                .zip(&t.data)
                .map(|(&a, &b)| {
                    let d = a as f64 - b as f64;
                    d * d
                })
                .sum::<f64>()
                / hw as f64
        })
        .collect()
}
