//! Goal-conditioned DQN: dueling Q-network over (observation, goal), double-Q
//! targets, decaying ε-greedy exploration and proportional prioritized replay.

mod dqn;
mod policy;
mod qnet;
mod replay;

pub use dqn::{double_q_target, double_q_value, DqnAgent, DqnConfig, TdBatchLoss, TdReport};
pub use policy::{argmax, select_action, EpsilonSchedule};
pub use qnet::{dueling_combine, FeatureEncoder, QCache, QNetwork};
pub use replay::{
    BufferStats, Composition, MinTree, PrioritizedBuffer, ReplayConfig, Sample, SumTree,
};

use crate::gridworld::{Action, Attributes, Observation};
use crate::language::Goal;

/// Which kind of trajectory a stored transition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TransitionKind {
    /// Episode ended by picking the goal object.
    Positive,
    /// Episode ended by picking another object.
    Negative,
    /// Episode hit the step limit.
    TimeOut,
    /// Hindsight copy of a negative episode under a substitute goal.
    Relabeled,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 4] = [
        TransitionKind::Positive,
        TransitionKind::Negative,
        TransitionKind::Relabeled,
        TransitionKind::TimeOut,
    ];

    pub fn index(self) -> usize {
        match self {
            TransitionKind::Positive => 0,
            TransitionKind::Negative => 1,
            TransitionKind::Relabeled => 2,
            TransitionKind::TimeOut => 3,
        }
    }
}

/// Replay unit `(s_t, a_t, r_t, s_{t+1}, done, g)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub observation: Observation,
    pub action: Action,
    pub reward: f32,
    pub next_observation: Observation,
    pub done: bool,
    pub goal: Goal,
    /// Attributes of the object picked by this action, if it picked one.
    /// Rewards under another goal are recomputed from it.
    pub picked: Option<Attributes>,
    pub kind: TransitionKind,
}
