//! Actor, critic and generator networks.

mod generator;
mod params;
mod recurrent;

pub use generator::{Generator, GeneratorConfig, TOTAL_STRIDE};
pub use params::{soft_update, truncated_normal, xavier_uniform, ParamSet};
pub use recurrent::{
    assemble_input, LstmState, NetKind, RecurrentConfig, RecurrentNet, StateValues, INIT_STD,
};

use rand::Rng;

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentConfig {
    /// Samples per observed segment.
    pub observation: usize,
    pub hidden: usize,
    pub generator: GeneratorConfig,
}

/// Live and target actor/critic plus the generator.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkBundle {
    pub actor: RecurrentNet,
    pub critic: RecurrentNet,
    pub actor_target: RecurrentNet,
    pub critic_target: RecurrentNet,
    pub generator: Generator,
}

impl NetworkBundle {
    pub fn new(cfg: &AgentConfig, rng: &mut impl Rng) -> Result<Self> {
        let actor = RecurrentNet::new(RecurrentConfig::actor(cfg.observation, cfg.hidden), rng);
        let critic = RecurrentNet::new(RecurrentConfig::critic(cfg.observation, cfg.hidden), rng);
        let generator = Generator::new(cfg.generator, rng)?;
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            generator,
        })
    }
}
