//! The `synth`, `train`, `eval` and `render` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adascan_core::crdpg::{adaptive_scans, completion_errors, static_scans, EvalReport, IterationRecord, Trainer};
use adascan_core::scanenv::{
    preprocess, resample_polyline, spiral_path, split_dataset, synth_dataset, ImageDataset, PartialScan,
    ProcessedImage, Raster,
};
use anyhow::{bail, ensure, Context};

use crate::config::RunConfig;
use crate::fsio::atomic_write;
use crate::{checkpoint, pgm, waypoints, wem};

pub const CSV_HEADER: &str =
    "iteration,gen_loss,critic_loss,actor_obj,l_avg,lr_gen,noise_scale,test_mse_mean,test_mse_std";
pub const CSV_NAME: &str = "learning_curve.csv";
pub const LOG_NAME: &str = "run.log";

pub fn synth(count: usize, height: usize, width: usize, seed: u64, out: &Path) -> anyhow::Result<()> {
    ensure!(count > 0, "usage: synth needs a positive image count");
    let ds = synth_dataset(count, height, width, seed)?;
    wem::save(&ds, out)?;
    log::info!("wrote {count} {height}x{width} images to {}", out.display());
    Ok(())
}

/// Preprocessed train and test splits.
pub struct Data {
    pub train: Vec<ProcessedImage>,
    pub test: Vec<ProcessedImage>,
}

pub fn load_data(cfg: &RunConfig) -> anyhow::Result<Data> {
    let env = cfg.train.env;
    let ds = match &cfg.dataset {
        Some(p) => wem::load(p)?,
        None => synth_dataset(cfg.synth_count, env.height, env.width, cfg.data_seed)?,
    };
    ensure!(
        ds.width == env.width && ds.height == env.height,
        "dataset images are {}x{} but the environment is {}x{}",
        ds.height,
        ds.width,
        env.height,
        env.width
    );
    let (train, test) = split_dataset(&ds, cfg.train_fraction)?;
    let prep = |d: &ImageDataset| d.images.iter().map(preprocess).collect::<Result<Vec<_>, _>>();
    Ok(Data {
        train: prep(&train)?,
        test: prep(&test)?,
    })
}

pub fn checkpoint_path(out: &Path, iteration: u64) -> PathBuf {
    out.join(format!("checkpoint-{iteration:08}.asc"))
}

pub fn checkpoint_interval(iterations: u64) -> u64 {
    (iterations / 10).max(1)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_row(r: &IterationRecord) -> String {
    let u = r.update;
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.iteration,
        opt(u.map(|u| u.gen_loss)),
        opt(u.map(|u| u.critic_loss)),
        opt(u.map(|u| u.actor_obj)),
        opt(r.l_avg),
        r.lr_gen,
        r.noise_scale,
        opt(r.eval.as_ref().map(|e| e.mean)),
        opt(r.eval.as_ref().map(|e| e.std)),
    )
}

pub struct TrainSummary {
    pub iteration: u64,
    pub checkpoints: Vec<PathBuf>,
}

/// Train from scratch, or resume from `cfg.checkpoint`. Rows of an existing
/// learning curve in the output directory past the resume point are dropped.
pub fn train(cfg: &RunConfig, mut progress: impl FnMut(&IterationRecord)) -> anyhow::Result<TrainSummary> {
    let out = &cfg.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let data = load_data(cfg)?;
    let mut log = String::new();
    let note = |log: &mut String, line: String| {
        log::info!("{line}");
        log.push_str(&line);
        log.push('\n');
    };
    for (k, v) in cfg.entries() {
        note(&mut log, format!("config {k} = {v}"));
    }
    let csv_path = out.join(CSV_NAME);
    let mut rows = vec![CSV_HEADER.to_string()];
    let mut trainer = match &cfg.checkpoint {
        None => Trainer::new(cfg.train, data.train, data.test)?,
        Some(path) => {
            let snap = checkpoint::load(path)?;
            let tr = Trainer::restore(cfg.train, data.train, data.test, &snap)
                .with_context(|| format!("checkpoint {} does not match the configuration", path.display()))?;
            if let Ok(text) = fs::read_to_string(&csv_path) {
                rows.extend(text.lines().skip(1).filter(|l| {
                    l.split(',').next().and_then(|m| m.parse::<u64>().ok()).is_some_and(|m| m <= snap.iteration)
                }).map(str::to_string));
            }
            note(&mut log, format!("resumed from {} at iteration {}", path.display(), snap.iteration));
            tr
        }
    };
    note(
        &mut log,
        format!("{} training and {} test images", trainer.train_images().len(), trainer.test_images().len()),
    );
    let every = checkpoint_interval(cfg.train.iterations);
    let mut checkpoints = Vec::new();
    let save = |trainer: &Trainer, rows: &[String], log: &str| -> anyhow::Result<PathBuf> {
        let path = checkpoint_path(out, trainer.iteration());
        checkpoint::save(&trainer.snapshot()?, &path)?;
        atomic_write(&csv_path, (rows.join("\n") + "\n").as_bytes())?;
        atomic_write(&out.join(LOG_NAME), log.as_bytes())?;
        Ok(path)
    };
    while !trainer.is_finished() {
        let rec = trainer.run_iteration()?;
        rows.push(csv_row(&rec));
        if let Some(u) = rec.update.filter(|u| u.skipped > 0) {
            note(&mut log, format!("iteration {}: {} tensor updates skipped", rec.iteration, u.skipped));
        }
        if let Some(e) = &rec.eval {
            let gen = opt(rec.update.map(|u| u.gen_loss));
            note(
                &mut log,
                format!("iteration {}: gen_loss {gen} test mse {} +- {}", rec.iteration, e.mean, e.std),
            );
        }
        progress(&rec);
        if rec.iteration % every == 0 || trainer.is_finished() {
            let path = save(&trainer, &rows, &log)?;
            note(&mut log, format!("checkpoint {}", path.display()));
            checkpoints.push(path);
        }
    }
    if checkpoints.is_empty() {
        checkpoints.push(save(&trainer, &rows, &log)?);
    }
    atomic_write(&out.join(LOG_NAME), log.as_bytes())?;
    Ok(TrainSummary {
        iteration: trainer.iteration(),
        checkpoints,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvalMode {
    Adaptive,
    Spiral,
    Waypoints(PathBuf),
}

impl EvalMode {
    pub fn name(&self) -> &'static str {
        match self {
            EvalMode::Adaptive => "adaptive",
            EvalMode::Spiral => "spiral",
            EvalMode::Waypoints(_) => "waypoints",
        }
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adaptive" => Ok(EvalMode::Adaptive),
            "spiral" => Ok(EvalMode::Spiral),
            _ => match s.strip_prefix("waypoints:") {
                Some(p) if !p.is_empty() => Ok(EvalMode::Waypoints(PathBuf::from(p))),
                _ => Err(format!("unknown mode {s:?}; expected adaptive, spiral or waypoints:PATH")),
            },
        }
    }
}

fn restore(cfg: &RunConfig, checkpoint_file: &Path) -> anyhow::Result<Trainer> {
    let data = load_data(cfg)?;
    ensure!(!data.test.is_empty(), "the test split is empty");
    let snap = checkpoint::load(checkpoint_file)?;
    Trainer::restore(cfg.train, data.train, data.test, &snap)
        .with_context(|| format!("checkpoint {} does not match the configuration", checkpoint_file.display()))
}

fn scans(trainer: &Trainer, images: &[&Raster], mode: &EvalMode) -> anyhow::Result<Vec<PartialScan>> {
    let env = trainer.config.env;
    Ok(match mode {
        EvalMode::Adaptive => adaptive_scans(&trainer.bundle.actor, &env, images)?,
        EvalMode::Spiral => static_scans(images, &spiral_path(&env)?),
        EvalMode::Waypoints(p) => static_scans(images, &resample_polyline(&waypoints::load(p)?, &env)?),
    })
}

/// Per-image completion errors on the test split, written to
/// `eval_<mode>.csv` in the output directory.
pub fn eval(cfg: &RunConfig, checkpoint_file: &Path, mode: &EvalMode) -> anyhow::Result<EvalReport> {
    let mut trainer = restore(cfg, checkpoint_file)?;
    let test = trainer.test_images().to_vec();
    let raws: Vec<&Raster> = test.iter().map(|p| &p.raw_norm).collect();
    let targets: Vec<&Raster> = test.iter().map(|p| &p.target_blur).collect();
    let s = scans(&trainer, &raws, mode)?;
    let report = EvalReport::from_errors(completion_errors(&mut trainer.bundle.generator, &s, &targets)?)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let mut text = String::from("mean,std,count\n");
    writeln!(text, "{},{},{}", report.mean, report.std, report.count)?;
    atomic_write(&cfg.out.join(format!("eval_{}.csv", mode.name())), text.as_bytes())?;
    Ok(report)
}

/// Write `scan.pgm`, `completion.pgm` and `target.pgm` for one test image.
pub fn render(cfg: &RunConfig, checkpoint_file: &Path, index: usize, mode: &EvalMode) -> anyhow::Result<()> {
    let mut trainer = restore(cfg, checkpoint_file)?;
    let n = trainer.test_images().len();
    if index >= n {
        bail!("usage: image index {index} is outside the test split of {n} images");
    }
    let img = trainer.test_images()[index].clone();
    let scan = scans(&trainer, &[&img.raw_norm], mode)?.remove(0);
    let out = trainer.bundle.generator.complete(&[&scan])?;
    let completion = Raster::from_data(img.target_blur.width, img.target_blur.height, out.into_data())?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    atomic_write(&cfg.out.join("scan.pgm"), &pgm::encode_scan(&scan))?;
    atomic_write(&cfg.out.join("completion.pgm"), &pgm::encode(&completion))?;
    atomic_write(&cfg.out.join("target.pgm"), &pgm::encode(&img.target_blur))?;
    Ok(())
}
