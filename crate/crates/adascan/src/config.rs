//! Run configuration files: `key = value` lines with `#` comments.
//!
//! Resolution order: the preset (command line, else the file's `preset`
//! key, else `desk`), then every other key in the file.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use adascan_core::crdpg::{LossVariant, Sawtooth, SupervisedMode, TrainConfig};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Desk,
}

impl Preset {
    pub fn config(self) -> TrainConfig {
        match self {
            Preset::Paper => TrainConfig::paper(),
            Preset::Desk => TrainConfig::desk(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err("expected paper or desk".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}: {reason}")]
    Value {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: expected \"key = value\"")]
    Syntax { line: usize },
    #[error("line {line}: {key} is already set on line {first}")]
    Duplicate { line: usize, key: String, first: usize },
    #[error(transparent)]
    Invalid(#[from] adascan_core::Error),
}

/// Every accepted key, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "preset",
    "dataset",
    "synth_count",
    "data_seed",
    "train_fraction",
    "out",
    "checkpoint",
    "seed",
    "iterations",
    "batch",
    "gamma",
    "beta_critic",
    "beta_actor",
    "beta_loss",
    "lr_actor",
    "lr_critic",
    "lr_generator",
    "lr_decay_base",
    "lr_decay_scale",
    "lr_period",
    "lr_floor",
    "sawtooth",
    "generator_decay",
    "ou_theta",
    "ou_sigma",
    "ou_mean",
    "ou_start",
    "noise_decay",
    "clip_enabled",
    "loss",
    "sobel_weight",
    "region_size",
    "supervised",
    "supervised_iterations",
    "replayed_actions",
    "replay_capacity",
    "eval_every",
    "hidden",
    "segments",
    "samples_per_segment",
    "spacing",
    "width",
    "height",
    "over_edge_penalty",
    "generator_channels",
    "generator_blocks",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub train: TrainConfig,
    /// WEM1 dataset; synthetic images are generated when unset.
    pub dataset: Option<PathBuf>,
    pub synth_count: usize,
    pub data_seed: u64,
    pub train_fraction: f64,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            preset,
            train: preset.config(),
            dataset: None,
            synth_count: 2048,
            data_seed: 0,
            train_fraction: 0.8,
            out: PathBuf::from("run"),
            checkpoint: None,
        }
    }

    pub fn parse(text: &str, preset: Option<Preset>) -> Result<Self, ConfigError> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if let Some(&(first, _, _)) = lines.iter().find(|(_, k, _)| *k == key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                    first,
                });
            }
            lines.push((line, key, value));
        }
        let value_error = |line: usize, key: &str, value: &str, reason: String| ConfigError::Value {
            line,
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        let file_preset = match lines.iter().find(|(_, k, _)| *k == "preset") {
            Some(&(line, key, value)) => Some(value.parse().map_err(|r| value_error(line, key, value, r))?),
            None => None,
        };
        let mut cfg = Self::from_preset(preset.or(file_preset).unwrap_or(Preset::Desk));
        for (line, key, value) in lines {
            if key != "preset" {
                cfg.set(key, value).map_err(|r| value_error(line, key, value, r))?;
            }
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Keep the generator extent equal to the environment extent.
    pub fn sync(&mut self) {
        self.train.generator.width = self.train.env.width;
        self.train.generator.height = self.train.env.height;
    }

    pub fn validate(&self) -> Result<(), adascan_core::Error> {
        self.train.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(adascan_core::Error::Config(format!(
                "train_fraction = {} is not in (0, 1)",
                self.train_fraction
            )));
        }
        if self.dataset.is_none() && self.synth_count < 2 {
            return Err(adascan_core::Error::Config("synth_count must be at least 2".into()));
        }
        Ok(())
    }

    /// Set one key; the error is the reason the value was rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let t = &mut self.train;
        match key {
            "preset" => self.preset = value.parse()?,
            "dataset" => self.dataset = (!value.is_empty()).then(|| PathBuf::from(value)),
            "synth_count" => self.synth_count = num(value)?,
            "data_seed" => self.data_seed = num(value)?,
            "train_fraction" => self.train_fraction = num(value)?,
            "out" => self.out = PathBuf::from(value),
            "checkpoint" => self.checkpoint = (!value.is_empty()).then(|| PathBuf::from(value)),
            "seed" => t.seed = num(value)?,
            "iterations" => t.iterations = num(value)?,
            "batch" => t.batch = num(value)?,
            "gamma" => t.gamma = num(value)?,
            "beta_critic" => t.beta_critic = num(value)?,
            "beta_actor" => t.beta_actor = num(value)?,
            "beta_loss" => t.beta_loss = num(value)?,
            "lr_actor" => t.lr_actor = num(value)?,
            "lr_critic" => t.lr_critic = num(value)?,
            "lr_generator" => t.lr_generator = num(value)?,
            "lr_decay_base" => t.lr_decay_base = num(value)?,
            "lr_decay_scale" => t.lr_decay_scale = num(value)?,
            "lr_period" => t.lr_period = num(value)?,
            "lr_floor" => t.lr_floor = num(value)?,
            "sawtooth" => {
                t.sawtooth = match value {
                    "down" => Sawtooth::Down,
                    "up" => Sawtooth::Up,
                    _ => return Err("expected down or up".into()),
                }
            }
            "generator_decay" => t.generator_decay = num(value)?,
            "ou_theta" => t.ou_theta = num(value)?,
            "ou_sigma" => t.ou_sigma = num(value)?,
            "ou_mean" => t.ou_mean = num(value)?,
            "ou_start" => t.ou_start = num(value)?,
            "noise_decay" => t.noise_decay = num(value)?,
            "clip_enabled" => t.clip_enabled = num(value)?,
            "loss" => {
                t.loss = match value {
                    "mse" => LossVariant::Mse,
                    "mse_sobel" => LossVariant::MseSobel,
                    "region_max" => LossVariant::RegionMax,
                    _ => return Err("expected mse, mse_sobel or region_max".into()),
                }
            }
            "sobel_weight" => t.sobel_weight = num(value)?,
            "region_size" => t.region_size = num(value)?,
            "supervised" => {
                t.supervised = match value {
                    "off" => SupervisedMode::Off,
                    "always" => SupervisedMode::Always,
                    "decayed" => SupervisedMode::Decayed,
                    _ => return Err("expected off, always or decayed".into()),
                }
            }
            "supervised_iterations" => t.supervised_iterations = num(value)?,
            "replayed_actions" => t.replayed_actions = num(value)?,
            "replay_capacity" => t.replay_capacity = num(value)?,
            "eval_every" => t.eval_every = num(value)?,
            "hidden" => t.hidden = num(value)?,
            "segments" => t.env.segments = num(value)?,
            "samples_per_segment" => t.env.samples_per_segment = num(value)?,
            "spacing" => t.env.spacing = num(value)?,
            "width" => t.env.width = num(value)?,
            "height" => t.env.height = num(value)?,
            "over_edge_penalty" => t.env.over_edge_penalty = num(value)?,
            "generator_channels" => {
                let parts = value
                    .split(',')
                    .map(|p| num::<usize>(p.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                t.generator.channels = parts
                    .try_into()
                    .map_err(|_| "expected three comma-separated channel counts".to_string())?;
            }
            "generator_blocks" => t.generator.residual_blocks = num(value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Resolved value of every key, as accepted by [`RunConfig::parse`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        KEYS.iter()
            .map(|&key| {
                let v = match key {
                    "preset" => self.preset.name().to_string(),
                    "dataset" => path(&self.dataset),
                    "synth_count" => self.synth_count.to_string(),
                    "data_seed" => self.data_seed.to_string(),
                    "train_fraction" => self.train_fraction.to_string(),
                    "out" => self.out.display().to_string(),
                    "checkpoint" => path(&self.checkpoint),
                    "seed" => t.seed.to_string(),
                    "iterations" => t.iterations.to_string(),
                    "batch" => t.batch.to_string(),
                    "gamma" => t.gamma.to_string(),
                    "beta_critic" => t.beta_critic.to_string(),
                    "beta_actor" => t.beta_actor.to_string(),
                    "beta_loss" => t.beta_loss.to_string(),
                    "lr_actor" => t.lr_actor.to_string(),
                    "lr_critic" => t.lr_critic.to_string(),
                    "lr_generator" => t.lr_generator.to_string(),
                    "lr_decay_base" => t.lr_decay_base.to_string(),
                    "lr_decay_scale" => t.lr_decay_scale.to_string(),
                    "lr_period" => t.lr_period.to_string(),
                    "lr_floor" => t.lr_floor.to_string(),
                    "sawtooth" => match t.sawtooth {
                        Sawtooth::Down => "down",
                        Sawtooth::Up => "up",
                    }
                    .to_string(),
                    "generator_decay" => t.generator_decay.to_string(),
                    "ou_theta" => t.ou_theta.to_string(),
                    "ou_sigma" => t.ou_sigma.to_string(),
                    "ou_mean" => t.ou_mean.to_string(),
                    "ou_start" => t.ou_start.to_string(),
                    "noise_decay" => t.noise_decay.to_string(),
                    "clip_enabled" => t.clip_enabled.to_string(),
                    "loss" => match t.loss {
                        LossVariant::Mse => "mse",
                        LossVariant::MseSobel => "mse_sobel",
                        LossVariant::RegionMax => "region_max",
                    }
                    .to_string(),
                    "sobel_weight" => t.sobel_weight.to_string(),
                    "region_size" => t.region_size.to_string(),
                    "supervised" => match t.supervised {
                        SupervisedMode::Off => "off",
                        SupervisedMode::Always => "always",
                        SupervisedMode::Decayed => "decayed",
                    }
                    .to_string(),
                    "supervised_iterations" => t.supervised_iterations.to_string(),
                    "replayed_actions" => t.replayed_actions.to_string(),
                    "replay_capacity" => t.replay_capacity.to_string(),
                    "eval_every" => t.eval_every.to_string(),
                    "hidden" => t.hidden.to_string(),
                    "segments" => t.env.segments.to_string(),
                    "samples_per_segment" => t.env.samples_per_segment.to_string(),
                    "spacing" => t.env.spacing.to_string(),
                    "width" => t.env.width.to_string(),
                    "height" => t.env.height.to_string(),
                    "over_edge_penalty" => t.env.over_edge_penalty.to_string(),
                    "generator_channels" => {
                        let c = t.generator.channels;
                        format!("{},{},{}", c[0], c[1], c[2])
                    }
                    "generator_blocks" => t.generator.residual_blocks.to_string(),
                    _ => unreachable!("key table out of sync"),
                };
                (key, v)
            })
            .collect()
    }

    /// The resolved configuration as a config file.
    pub fn render(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn num<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| e.to_string())
}
