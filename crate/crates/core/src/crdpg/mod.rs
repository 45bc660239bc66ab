//! Cooperative recurrent deterministic policy gradients: episode collection
//! with rotational noise, loss shaping, bootstrapped targets and the three
//! network updates.

mod config;
mod eval;
mod losses;
mod noise;
mod schedule;
mod targets;
mod trainer;
mod updates;

pub use config::{LossVariant, Sawtooth, SupervisedMode, TrainConfig};
pub use eval::{adaptive_scans, completion_errors, policy_rollouts, static_scans, EvalReport, EVAL_CHUNK};
pub use losses::{compute_step_losses, RunningStats};
pub use noise::{noise_scale, rotate_action, NoiseState};
pub use schedule::lr_schedule;
pub use targets::{compute_targets, supervised_targets, supervised_weight, Bootstrap, TableBootstrap};
pub use trainer::{collect_episode, IterationRecord, RngState, Snapshot, Trainer, UpdateStats};
pub use updates::{actor_objective, bootstrap_values, critic_loss, critic_values, Minibatch};
