//! Minimal reverse-mode network library: dense layers with ReLU, softmax
//! cross-entropy and weighted squared error, Adam, and a central-difference
//! gradient checker.

mod check;
mod layers;
mod loss;
mod optim;
mod params;

pub use check::{finite_diff_check, finite_diff_check_subset, gradients, Objective};
pub use layers::{Dense, Input, Mlp, Trunk, TrunkCache};
pub use loss::{log_softmax, softmax, softmax_cross_entropy, weighted_squared_error};
pub use optim::{Adam, AdamConfig, LrSchedule};
pub use params::{Gradients, Param, ParamId, ParameterSet, Real};
