//! Core of the hindsight instruction-generation lab.
//!
//! Everything in this crate is pure computation over explicit, seeded random
//! number generators: the instruction-following gridworld, the templated
//! instruction language, a small reverse-mode network library, the
//! goal-conditioned DQN agent with prioritized replay, the learned
//! instruction generator, and the training loop that ties them together with
//! the different hindsight relabeling strategies.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! parsing and the command line live in the `higher-lab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agent;
pub mod error;
pub mod generator;
pub mod gridworld;
pub mod higher;
pub mod language;
pub mod metrics;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
pub use gridworld::{
    Action, Attributes, Cardinalities, EnvConfig, GridState, GridWorld, Heading, ObjectSpec,
    Observation, OutcomeTag, Pos, RewardMode,
};
pub use language::{Goal, GoalSplit, Vocabulary};
