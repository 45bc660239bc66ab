//! Adaptive sparse scan paths trained with cooperative recurrent deterministic
//! policy gradients.
//!
//! A recurrent actor steers a probe across a 2-D image in straight segments,
//! a convolutional generator completes the resulting partial scan, and a
//! recurrent critic learns to predict the generator's loss so that the actor
//! can be trained through it.
//!
//! The crate is `no_std` (with `alloc`). Everything touching files lives in
//! the `adascan` companion crate.
//!
//! - [`numcore`]: tensors, reverse-mode differentiation, losses, ADAM
//! - [`scanenv`]: images, preprocessing, the scan environment and static paths
//! - [`agents`]: actor, critic and generator networks
//! - [`replay`]: episode replay buffer
//! - [`crdpg`]: the training loop and evaluation harness

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agents;
pub mod crdpg;
mod error;
pub mod numcore;
pub mod replay;
pub mod scanenv;

pub use error::{Error, Result};
