//! File formats, run configuration and commands behind the `adascan`
//! binary: WEM1 datasets, ASC1 checkpoints, PGM renders, waypoint files and
//! learning-curve CSVs.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod format;
pub mod fsio;
pub mod pgm;
pub mod waypoints;
pub mod wem;

pub use config::{ConfigError, Preset, RunConfig};
pub use format::FormatError;
