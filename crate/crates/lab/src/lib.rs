//! Experiment harness around `higher-core`: TOML configuration, run
//! directories, checkpoints, JSON records, presets and the generator study.
//! The `higher` binary is a thin command line over these modules.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod records;
pub mod runs;
pub mod study;

pub use error::{LabError, Result};
