use alloc::format;

use crate::agents::{AgentConfig, GeneratorConfig};
use crate::scanenv::EnvConfig;
use crate::{Error, Result};

/// Generator loss used both for training and as the RL signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossVariant {
    Mse,
    /// MSE plus `sobel_weight` times the MSE of Sobel responses.
    MseSobel,
    /// Largest MSE over non-overlapping `region_size` tiles.
    RegionMax,
}

/// Use of directly computed discounted losses as critic targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupervisedMode {
    Off,
    Always,
    /// Blend weight falls linearly from 1 to 0 over `supervised_iterations`.
    Decayed,
}

/// Direction of the cyclic learning-rate ramp within each period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sawtooth {
    Down,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: u64,
    pub batch: usize,
    pub gamma: f64,
    pub beta_critic: f64,
    pub beta_actor: f64,
    pub beta_loss: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_generator: f64,
    pub lr_decay_base: f64,
    /// Exponent of the decay envelope at `m = M`.
    pub lr_decay_scale: f64,
    /// Sawtooth period as a fraction of `M`.
    pub lr_period: f64,
    pub lr_floor: f64,
    pub sawtooth: Sawtooth,
    pub generator_decay: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_mean: f64,
    pub ou_start: f64,
    pub noise_decay: bool,
    pub clip_enabled: bool,
    pub loss: LossVariant,
    pub sobel_weight: f64,
    pub region_size: usize,
    pub supervised: SupervisedMode,
    pub supervised_iterations: u64,
    /// Differentiate the critic w.r.t. replayed instead of live actions.
    pub replayed_actions: bool,
    pub replay_capacity: usize,
    /// Test-set evaluation cadence; 0 selects `max(M / 100, 1)`.
    pub eval_every: u64,
    pub seed: u64,
    pub hidden: usize,
    pub env: EnvConfig,
    pub generator: GeneratorConfig,
}

impl TrainConfig {
    pub fn paper() -> Self {
        let env = EnvConfig::default();
        Self {
            iterations: 1_000_000,
            batch: 32,
            gamma: 0.97,
            beta_critic: 0.9997,
            beta_actor: 0.9997,
            beta_loss: 0.997,
            lr_actor: 0.0005,
            lr_critic: 0.0010,
            lr_generator: 0.0030,
            lr_decay_base: 0.75,
            lr_decay_scale: 5.0,
            lr_period: 2.0 / 9.0,
            lr_floor: 0.2,
            sawtooth: Sawtooth::Down,
            generator_decay: 0.99999,
            ou_theta: 0.1,
            ou_sigma: 0.2,
            ou_mean: 0.0,
            ou_start: 0.0,
            noise_decay: true,
            clip_enabled: true,
            loss: LossVariant::Mse,
            sobel_weight: 0.1,
            region_size: 5,
            supervised: SupervisedMode::Off,
            supervised_iterations: 100_000,
            replayed_actions: false,
            replay_capacity: 100_000,
            eval_every: 0,
            seed: 0,
            hidden: 256,
            env,
            generator: GeneratorConfig::full(env.width, env.height),
        }
    }

    /// Single-core scale: hidden 64, reduced generator, 5000 iterations.
    pub fn desk() -> Self {
        let p = Self::paper();
        Self {
            iterations: 5000,
            batch: 16,
            replay_capacity: 2000,
            hidden: 64,
            generator: GeneratorConfig::desk(p.env.width, p.env.height),
            ..p
        }
    }

    pub fn agent(&self) -> AgentConfig {
        AgentConfig {
            observation: self.env.samples_per_segment,
            hidden: self.hidden,
            generator: self.generator,
        }
    }

    pub fn eval_interval(&self) -> u64 {
        if self.eval_every > 0 {
            self.eval_every
        } else {
            (self.iterations / 100).max(1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.generator.validate()?;
        let unit = |name: &str, v: f64| -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} is not in [0, 1]")))
            }
        };
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma = {} is not in [0, 1)", self.gamma)));
        }
        unit("beta_critic", self.beta_critic)?;
        unit("beta_actor", self.beta_actor)?;
        unit("beta_loss", self.beta_loss)?;
        unit("lr_floor", self.lr_floor)?;
        unit("generator_decay", self.generator_decay)?;
        for (name, v) in [
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("lr_generator", self.lr_generator),
            ("lr_period", self.lr_period),
            ("lr_decay_base", self.lr_decay_base),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} = {v} is not in (0, 1]")));
            }
        }
        if self.batch < 2 {
            return Err(Error::Config("batch must be >= 2 for batch normalization".into()));
        }
        if self.replay_capacity < self.batch {
            return Err(Error::Config(format!(
                "replay capacity {} is below the batch size {}",
                self.replay_capacity, self.batch
            )));
        }
        if self.env.width != self.env.height {
            return Err(Error::Config("dihedral augmentation needs square images".into()));
        }
        if self.hidden == 0 || self.region_size == 0 {
            return Err(Error::Config("hidden size and region size must be positive".into()));
        }
        if self.generator.width != self.env.width || self.generator.height != self.env.height {
            return Err(Error::Config("generator extents differ from the environment".into()));
        }
        if self.ou_sigma < 0.0 || self.ou_theta < 0.0 || self.sobel_weight < 0.0 {
            return Err(Error::Config("noise and loss weights must be non-negative".into()));
        }
        Ok(())
    }
}
