//! Hindsight training loop. Failed episodes that picked the wrong object are
//! copied into replay under a substitute goal naming what was picked, taken
//! from a perfect describer, a noisy one, or the learned instruction
//! generator once its gate opens.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::agent::{
    select_action, Composition, DqnAgent, DqnConfig, EpsilonSchedule, FeatureEncoder,
    PrioritizedBuffer, ReplayConfig, Transition, TransitionKind,
};
use crate::error::{bail, Result};
use crate::generator::{
    gate_open, validation_accuracy, Accuracy, GateConfig, GeneratorConfig, InstructionGenerator,
    PairDataset,
};
use crate::gridworld::{
    satisfies, Action, EnvConfig, GridState, GridWorld, Heading, ObjectSpec, Observation,
    OutcomeTag, Pos, RewardMode,
};
use crate::language::{noisy_describe, oracle_describe, split_goals, Goal, GoalSplit, Vocabulary};
use crate::metrics::{DiagnosticsRow, MetricsLog, MetricsRow, RunSummary};
use crate::rng::{self, LabRng};

/// Source of substitute goals for failed episodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum RelabelStrategy {
    /// No relabeling: plain DQN.
    #[default]
    None,
    /// Exact description of the picked object.
    Oracle,
    /// Exact description with each attribute swapped with probability `p`.
    Noisy { p: f64 },
    /// Learned generator applied to the terminal observation, once gated open.
    Learned,
}

impl RelabelStrategy {
    pub fn label(&self) -> String {
        match self {
            RelabelStrategy::None => String::from("none"),
            RelabelStrategy::Oracle => String::from("oracle"),
            RelabelStrategy::Noisy { p } => format!("noisy-{p}"),
            RelabelStrategy::Learned => String::from("learned"),
        }
    }

    pub fn relabels(&self) -> bool {
        !matches!(self, RelabelStrategy::None)
    }
}

/// One episode: its transitions under the episode goal and how it ended.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub goal: Goal,
    pub transitions: Vec<Transition>,
    pub outcome: OutcomeTag,
    pub picked: Option<ObjectSpec>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Observation after the last action.
    pub fn terminal_observation(&self) -> Option<&Observation> {
        self.transitions.last().map(|t| &t.next_observation)
    }

    pub fn kind(&self) -> TransitionKind {
        kind_of(self.outcome)
    }
}

fn kind_of(outcome: OutcomeTag) -> TransitionKind {
    match outcome {
        OutcomeTag::Success => TransitionKind::Positive,
        OutcomeTag::WrongPick => TransitionKind::Negative,
        OutcomeTag::TimeOut => TransitionKind::TimeOut,
    }
}

/// Chooses actions from the full state (scripted) or the observation.
pub trait Policy {
    fn act(&mut self, state: &GridState, obs: &Observation) -> Result<Action>;
}

/// ε-greedy over the online Q-network.
pub struct EpsilonGreedy<'a> {
    pub agent: &'a DqnAgent,
    pub epsilon: f64,
    pub rng: &'a mut LabRng,
}

impl Policy for EpsilonGreedy<'_> {
    fn act(&mut self, state: &GridState, obs: &Observation) -> Result<Action> {
        self.agent.act(obs, &state.goal, self.epsilon, self.rng)
    }
}

/// Uniformly random actions.
pub struct RandomPolicy<'a> {
    pub rng: &'a mut LabRng,
}

impl Policy for RandomPolicy<'_> {
    fn act(&mut self, _state: &GridState, _obs: &Observation) -> Result<Action> {
        Ok(Action::ALL[self.rng.gen_range(0..Action::COUNT)])
    }
}

/// Follows a shortest path to face the goal object, then picks it.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedBot;

impl ScriptedBot {
    /// Shortest action sequence that ends facing `target`, or `None` if the
    /// target cannot be faced from any reachable cell.
    pub fn plan(state: &GridState, target: Pos) -> Option<Vec<Action>> {
        let rows = state.rows as usize;
        let cols = state.cols as usize;
        let key = |p: Pos, h: Heading| (p.row as usize * cols + p.col as usize) * 4 + h.index();
        let mut parent: Vec<Option<(usize, Action)>> = vec![None; rows * cols * 4];
        let mut seen = vec![false; rows * cols * 4];
        let start = (state.agent_pos, state.agent_dir);
        seen[key(start.0, start.1)] = true;
        let mut queue = VecDeque::from([start]);
        while let Some((pos, dir)) = queue.pop_front() {
            if pos.offset(dir.delta(), 1) == target {
                let mut actions = Vec::new();
                let mut k = key(pos, dir);
                while let Some((prev, a)) = parent[k] {
                    actions.push(a);
                    k = prev;
                }
                actions.reverse();
                return Some(actions);
            }
            let moves = [
                (Action::Left, pos, dir.turn_left()),
                (Action::Right, pos, dir.turn_right()),
                (Action::Forward, pos.offset(dir.delta(), 1), dir),
            ];
            for (a, p, h) in moves {
                if p != pos && !state.is_free(p) {
                    continue;
                }
                let k = key(p, h);
                if !seen[k] {
                    seen[k] = true;
                    parent[k] = Some((key(pos, dir), a));
                    queue.push_back((p, h));
                }
            }
        }
        None
    }
}

impl Policy for ScriptedBot {
    fn act(&mut self, state: &GridState, _obs: &Observation) -> Result<Action> {
        let Some(target) = state.goal_object().map(|o| o.pos) else {
            bail!(Usage, "the room holds no object matching the goal");
        };
        match Self::plan(state, target) {
            Some(plan) => Ok(plan.first().copied().unwrap_or(Action::Pick)),
            None => bail!(Usage, "goal object is unreachable"),
        }
    }
}

/// Rolls `policy` from `state` until the episode ends. Every transition
/// carries the episode goal and the kind implied by the outcome.
pub fn run_episode<P: Policy + ?Sized>(
    env: &GridWorld,
    mut state: GridState,
    policy: &mut P,
) -> Result<Trajectory> {
    let goal = state.goal;
    let mut transitions = Vec::new();
    let mut obs = env.observe(&state);
    loop {
        let action = policy.act(&state, &obs)?;
        let result = env.step(&mut state, action)?;
        let next = env.observe(&state);
        transitions.push(Transition {
            observation: core::mem::replace(&mut obs, next.clone()),
            action,
            reward: result.reward,
            next_observation: next,
            done: result.done,
            goal,
            picked: result.picked.map(|o| o.attrs),
            kind: TransitionKind::TimeOut,
        });
        if let Some(outcome) = result.outcome {
            let kind = kind_of(outcome);
            for t in &mut transitions {
                t.kind = kind;
            }
            return Ok(Trajectory {
                goal,
                transitions,
                outcome,
                picked: result.picked,
            });
        }
    }
}

/// Copies a wrong-pick trajectory under `new_goal`, recomputing every
/// reward with the sparse predicate against the picked object.
pub fn relabel(traj: &Trajectory, new_goal: Goal) -> Result<Vec<Transition>> {
    if traj.outcome != OutcomeTag::WrongPick {
        bail!(
            Usage,
            "only wrong-pick trajectories can be relabeled, got {:?}",
            traj.outcome
        );
    }
    Ok(traj
        .transitions
        .iter()
        .map(|t| Transition {
            goal: new_goal,
            reward: match &t.picked {
                Some(p) if satisfies(p, &new_goal) => 1.0,
                _ => 0.0,
            },
            kind: TransitionKind::Relabeled,
            ..t.clone()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub env: EnvConfig,
    pub reward_mode: RewardMode,
    pub strategy: RelabelStrategy,
    pub dqn: DqnConfig,
    pub replay: ReplayConfig,
    pub exploration: EpsilonSchedule,
    pub generator: GeneratorConfig,
    pub total_steps: u64,
    /// No TD updates until the buffer holds this many transitions.
    pub warmup_steps: u64,
    /// Environment steps per TD update.
    pub update_every: u64,
    pub log_every: u64,
    /// Evaluation episodes per goal split at every logging step.
    pub eval_episodes: usize,
    /// Evaluation episodes per goal split after training.
    pub final_eval_episodes: usize,
    pub eval_epsilon: f64,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub seed: u64,
}

impl TrainConfig {
    /// 10×10 room, 300-object universe, 5M steps.
    pub fn paper(strategy: RelabelStrategy) -> Self {
        Self {
            env: EnvConfig::paper(),
            reward_mode: RewardMode::Sparse,
            strategy,
            dqn: DqnConfig::default(),
            replay: ReplayConfig::default(),
            exploration: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 500_000,
            },
            generator: GeneratorConfig {
                hidden: vec![128],
                ..GeneratorConfig::default()
            },
            total_steps: 5_000_000,
            warmup_steps: 1_000,
            update_every: 1,
            log_every: 50_000,
            eval_episodes: 100,
            final_eval_episodes: 1_000,
            eval_epsilon: 0.05,
            test_fraction: 0.2,
            split_seed: 0,
            seed: 0,
        }
    }

    /// 6×6 room, 36-object universe, 300k steps, sized for one core.
    pub fn desk(strategy: RelabelStrategy) -> Self {
        Self {
            env: EnvConfig::desk(),
            dqn: DqnConfig {
                hidden: vec![64, 64],
                ..DqnConfig::default()
            },
            replay: ReplayConfig {
                capacity: 150_000,
                ..ReplayConfig::default()
            },
            exploration: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 100_000,
            },
            generator: GeneratorConfig {
                gate: GateConfig::PositiveCount { min_positives: 200 },
                ..GeneratorConfig::default()
            },
            total_steps: 300_000,
            warmup_steps: 1_000,
            update_every: 4,
            log_every: 10_000,
            eval_episodes: 50,
            final_eval_episodes: 500,
            ..Self::paper(strategy)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.reward_mode == RewardMode::Shaped && self.strategy.relabels() {
            bail!(Config, "shaped rewards cannot be combined with relabeling");
        }
        if let RelabelStrategy::Noisy { p } = self.strategy {
            if !(0.0..=1.0).contains(&p) {
                bail!(Config, "noise probability must lie in [0, 1], got {p}");
            }
        }
        if self.log_every == 0 || self.update_every == 0 {
            bail!(Config, "log_every and update_every must be positive");
        }
        if self.dqn.batch_size == 0 || self.replay.capacity == 0 {
            bail!(Config, "batch size and replay capacity must be positive");
        }
        if self.final_eval_episodes == 0 {
            bail!(Config, "final_eval_episodes must be positive");
        }
        if !(0.0..1.0).contains(&self.generator.val_fraction) {
            bail!(Config, "val_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

const TAG_NETWORK: u64 = 1;
const TAG_EPISODES: u64 = 2;
const TAG_EXPLORE: u64 = 3;
const TAG_REPLAY: u64 = 4;
const TAG_RELABEL: u64 = 5;
const TAG_GENERATOR_INIT: u64 = 6;
const TAG_GENERATOR_TRAIN: u64 = 7;
const TAG_EVAL: u64 = 8;
const TAG_FINAL_EVAL: u64 = 9;

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    episodes: u64,
    positives: u64,
    wrong_picks: u64,
    time_outs: u64,
    relabeled_trajectories: u64,
    relabeled_transitions: u64,
    relabel_reward_one: u64,
    relabel_goal_correct: u64,
    first_gate_open_step: Option<u64>,
    first_relabel_step: Option<u64>,
    pairs_since_eval: u64,
}

/// Owns every piece of mutable training state for one run.
pub struct Trainer {
    config: TrainConfig,
    env: GridWorld,
    split: GoalSplit,
    pub agent: DqnAgent,
    pub buffer: PrioritizedBuffer<Transition>,
    composition: Composition,
    pub generator: Option<InstructionGenerator>,
    pub dataset: PairDataset,
    accuracy: Option<Accuracy>,
    episode_rng: LabRng,
    explore_rng: LabRng,
    replay_rng: LabRng,
    relabel_rng: LabRng,
    generator_rng: LabRng,
    eval_rng: LabRng,
    env_steps: u64,
    counters: Counters,
    interval_loss: (f64, u64),
    last_loss: f64,
    log: MetricsLog,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let env = GridWorld::with_reward(config.env, config.reward_mode)?;
        let vocab = Vocabulary::new(config.env.cardinalities)?;
        let split = split_goals(&vocab.universe(), config.test_fraction, config.split_seed)?;
        let encoder = FeatureEncoder {
            observation_len: config.env.observation_len(),
            cards: config.env.cardinalities,
        };
        let seed = config.seed;
        let agent = DqnAgent::new(config.dqn.clone(), encoder, rng::next_seed(&mut rng::derive(seed, TAG_NETWORK)));
        let generator = matches!(config.strategy, RelabelStrategy::Learned).then(|| {
            InstructionGenerator::new(
                config.env.observation_len(),
                config.env.cardinalities,
                &config.generator,
                rng::next_seed(&mut rng::derive(seed, TAG_GENERATOR_INIT)),
            )
        });
        Ok(Self {
            buffer: PrioritizedBuffer::new(
                config.replay.capacity,
                config.replay.alpha,
                config.replay.priority_floor,
            ),
            composition: Composition::default(),
            dataset: PairDataset::new(config.generator.val_fraction),
            accuracy: None,
            episode_rng: rng::derive(seed, TAG_EPISODES),
            explore_rng: rng::derive(seed, TAG_EXPLORE),
            replay_rng: rng::derive(seed, TAG_REPLAY),
            relabel_rng: rng::derive(seed, TAG_RELABEL),
            generator_rng: rng::derive(seed, TAG_GENERATOR_TRAIN),
            eval_rng: rng::derive(seed, TAG_EVAL),
            env_steps: 0,
            counters: Counters::default(),
            interval_loss: (0.0, 0),
            last_loss: f64::NAN,
            log: MetricsLog::new(config.strategy.label(), seed),
            env,
            split,
            agent,
            generator,
            config,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn env(&self) -> &GridWorld {
        &self.env
    }

    pub fn split(&self) -> &GoalSplit {
        &self.split
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn log(&self) -> &MetricsLog {
        &self.log
    }

    pub fn into_log(self) -> MetricsLog {
        self.log
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    pub fn gate_is_open(&self) -> bool {
        match self.config.strategy {
            RelabelStrategy::Learned => gate_open(
                self.accuracy.map_or(0.0, |a| a.full),
                self.dataset.val.len(),
                self.counters.positives,
                &self.config.generator.gate,
            ),
            _ => true,
        }
    }

    /// Trains for the configured budget, then evaluates the final policy.
    pub fn run(&mut self) -> Result<RunSummary> {
        while self.env_steps < self.config.total_steps {
            self.train_episode()?;
        }
        Ok(self.summary())
    }

    /// One training episode; an episode cut short by the step budget is
    /// discarded without being stored.
    pub fn train_episode(&mut self) -> Result<Option<OutcomeTag>> {
        let goal = self.split.train[self.episode_rng.gen_range(0..self.split.train.len())];
        let mut state = self.env.reset(rng::next_seed(&mut self.episode_rng), goal)?;
        let mut obs = self.env.observe(&state);
        let mut transitions = Vec::new();
        let outcome = loop {
            if self.env_steps >= self.config.total_steps {
                return Ok(None);
            }
            let epsilon = self.config.exploration.at(self.env_steps);
            let q = self.agent.q_values(&obs, &goal)?;
            let action = Action::ALL[select_action(&q, epsilon, &mut self.explore_rng)];
            let result = self.env.step(&mut state, action)?;
            let next = self.env.observe(&state);
            transitions.push(Transition {
                observation: core::mem::replace(&mut obs, next.clone()),
                action,
                reward: result.reward,
                next_observation: next,
                done: result.done,
                goal,
                picked: result.picked.map(|o| o.attrs),
                kind: TransitionKind::TimeOut,
            });
            self.env_steps += 1;
            self.maybe_update()?;
            if self.env_steps % self.config.log_every == 0 {
                self.log_row()?;
            }
            if let Some(outcome) = result.outcome {
                break outcome;
            }
        };
        let kind = kind_of(outcome);
        for t in &mut transitions {
            t.kind = kind;
        }
        let traj = Trajectory {
            goal,
            transitions,
            outcome,
            picked: state.picked,
        };
        self.store(&traj)?;
        Ok(Some(outcome))
    }

    fn maybe_update(&mut self) -> Result<()> {
        let ready = self.buffer.len() as u64 >= self.config.warmup_steps.max(self.config.dqn.batch_size as u64);
        if !ready || self.env_steps % self.config.update_every != 0 {
            return Ok(());
        }
        let progress = self.env_steps as f64 / self.config.total_steps.max(1) as f64;
        let beta = self.config.replay.beta_at(progress);
        let report = self.agent.td_update(&mut self.buffer, beta, &mut self.replay_rng)?;
        self.interval_loss.0 += report.loss;
        self.interval_loss.1 += 1;
        Ok(())
    }

    fn store(&mut self, traj: &Trajectory) -> Result<()> {
        self.counters.episodes += 1;
        for t in &traj.transitions {
            self.buffer.add_tracked(t.clone(), &mut self.composition);
        }
        match traj.outcome {
            OutcomeTag::Success => {
                self.counters.positives += 1;
                self.on_success(traj)?;
            }
            OutcomeTag::WrongPick => {
                self.counters.wrong_picks += 1;
                self.on_wrong_pick(traj)?;
            }
            OutcomeTag::TimeOut => self.counters.time_outs += 1,
        }
        Ok(())
    }

    fn on_success(&mut self, traj: &Trajectory) -> Result<()> {
        let Some(generator) = self.generator.as_mut() else {
            return Ok(());
        };
        let Some(terminal) = traj.terminal_observation() else {
            return Ok(());
        };
        self.dataset.record_pair(terminal.clone(), traj.goal);
        let cfg = &self.config.generator;
        if !self.dataset.train.is_empty() && cfg.steps_per_success > 0 {
            generator.train(&self.dataset, cfg.steps_per_success, cfg.batch_size, &mut self.generator_rng)?;
        }
        self.counters.pairs_since_eval += 1;
        if self.counters.pairs_since_eval >= cfg.eval_every_pairs.max(1) && !self.dataset.val.is_empty() {
            self.counters.pairs_since_eval = 0;
            self.accuracy = Some(validation_accuracy(&generator.model, &self.dataset.val)?);
        }
        Ok(())
    }

    fn on_wrong_pick(&mut self, traj: &Trajectory) -> Result<()> {
        let Some(picked) = traj.picked else {
            bail!(Invariant, "wrong-pick trajectory without a picked object");
        };
        let new_goal = match self.config.strategy {
            RelabelStrategy::None => return Ok(()),
            RelabelStrategy::Oracle => oracle_describe(&picked),
            RelabelStrategy::Noisy { p } => {
                noisy_describe(&picked, p, &self.config.env.cardinalities, &mut self.relabel_rng)
            }
            RelabelStrategy::Learned => {
                if !self.gate_is_open() {
                    return Ok(());
                }
                self.counters.first_gate_open_step.get_or_insert(self.env_steps);
                let (Some(generator), Some(terminal)) = (&self.generator, traj.terminal_observation()) else {
                    bail!(Invariant, "learned relabeling without a generator or terminal observation");
                };
                generator.predict_goal(terminal)?
            }
        };
        let copies = relabel(traj, new_goal)?;
        let reward_one = copies.last().is_some_and(|t| t.reward == 1.0);
        let goal_correct = new_goal == oracle_describe(&picked);
        let c = &mut self.counters;
        c.relabeled_trajectories += 1;
        c.relabeled_transitions += copies.len() as u64;
        c.relabel_reward_one += reward_one as u64;
        c.relabel_goal_correct += goal_correct as u64;
        c.first_relabel_step.get_or_insert(self.env_steps);
        if c.relabel_reward_one != c.relabel_goal_correct {
            bail!(
                Invariant,
                "relabel soundness broken: {} rewarded relabels but {} correct goals",
                c.relabel_reward_one,
                c.relabel_goal_correct
            );
        }
        for t in copies {
            self.buffer.add_tracked(t, &mut self.composition);
        }
        Ok(())
    }

    fn check_buffer(&self) -> Result<()> {
        if self.composition.total() != self.buffer.len() {
            bail!(
                Invariant,
                "buffer holds {} transitions but composition counts {} (counts {:?}, step {})",
                self.buffer.len(),
                self.composition.total(),
                self.composition.counts,
                self.env_steps
            );
        }
        Ok(())
    }

    fn log_row(&mut self) -> Result<()> {
        self.check_buffer()?;
        let episodes = self.config.eval_episodes;
        let (train_success, test_success) = if episodes == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let seed = rng::next_seed(&mut self.eval_rng);
            (
                self.evaluate(&self.split.train, episodes, seed)?,
                self.evaluate(&self.split.test, episodes, seed ^ 0x5eed)?,
            )
        };
        if self.interval_loss.1 > 0 {
            self.last_loss = self.interval_loss.0 / self.interval_loss.1 as f64;
            self.interval_loss = (0.0, 0);
        }
        let f = self.composition.fractions();
        self.log.rows.push(MetricsRow {
            env_steps: self.env_steps,
            train_success,
            test_success,
            gen_accuracy: self.accuracy.map_or(f64::NAN, |a| a.full),
            frac_positive: f[0],
            frac_negative: f[1],
            frac_relabeled: f[2],
            frac_timeout: f[3],
            epsilon: self.config.exploration.at(self.env_steps),
            td_loss: self.last_loss,
        });
        let c = self.counters;
        self.log.diagnostics.push(DiagnosticsRow {
            env_steps: self.env_steps,
            episodes: c.episodes,
            positives: c.positives,
            wrong_picks: c.wrong_picks,
            time_outs: c.time_outs,
            dataset_train: self.dataset.train.len(),
            dataset_val: self.dataset.val.len(),
            gate_open: c.first_gate_open_step.is_some(),
            relabeled_trajectories: c.relabeled_trajectories,
            relabeled_transitions: c.relabeled_transitions,
            relabel_reward_one: c.relabel_reward_one,
            relabel_goal_correct: c.relabel_goal_correct,
            per_attribute_accuracy: self.accuracy.map(|a| a.per_attribute),
            buffer_size: self.buffer.len(),
            td_updates: self.agent.updates(),
        });
        Ok(())
    }

    /// Success rate of the current network at the evaluation ε on goals
    /// drawn uniformly from `goals`. Uses its own generator seeded by `seed`.
    pub fn evaluate(&self, goals: &[Goal], episodes: usize, seed: u64) -> Result<f64> {
        evaluate_agent(&self.agent, &self.env, goals, episodes, self.config.eval_epsilon, seed)
    }

    pub fn summary(&self) -> RunSummary {
        let c = self.counters;
        let n = self.config.final_eval_episodes;
        let seed = rng::next_seed(&mut rng::derive(self.config.seed, TAG_FINAL_EVAL));
        let eval = |goals: &[Goal], s: u64| {
            if n == 0 {
                f64::NAN
            } else {
                self.evaluate(goals, n, s).unwrap_or(f64::NAN)
            }
        };
        RunSummary {
            strategy: self.config.strategy.label(),
            seed: self.config.seed,
            env_steps: self.env_steps,
            episodes: c.episodes,
            positives: c.positives,
            td_updates: self.agent.updates(),
            final_train_success: eval(&self.split.train, seed),
            final_test_success: eval(&self.split.test, seed ^ 0x5eed),
            final_gen_accuracy: self.accuracy.map(|a| a.full),
            first_gate_open_step: c.first_gate_open_step,
            first_relabel_step: c.first_relabel_step,
            relabeled_trajectories: c.relabeled_trajectories,
            relabeled_transitions: c.relabeled_transitions,
            relabel_reward_one: c.relabel_reward_one,
            relabel_goal_correct: c.relabel_goal_correct,
        }
    }
}

/// Runs `episodes` ε-greedy episodes and returns the fraction that succeed.
pub fn evaluate_agent(
    agent: &DqnAgent,
    env: &GridWorld,
    goals: &[Goal],
    episodes: usize,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    if goals.is_empty() || episodes == 0 {
        bail!(Usage, "evaluation needs goals and at least one episode");
    }
    let mut rng = rng::seeded(seed);
    let mut wins = 0usize;
    for _ in 0..episodes {
        let goal = goals[rng.gen_range(0..goals.len())];
        let state = env.reset(rng::next_seed(&mut rng), goal)?;
        let mut policy = EpsilonGreedy {
            agent,
            epsilon,
            rng: &mut rng,
        };
        if run_episode(env, state, &mut policy)?.outcome == OutcomeTag::Success {
            wins += 1;
        }
    }
    Ok(wins as f64 / episodes as f64)
}

/// Full run: trains and returns the log with the final summary.
pub fn train(config: TrainConfig) -> Result<(MetricsLog, RunSummary)> {
    let mut trainer = Trainer::new(config)?;
    let summary = trainer.run()?;
    Ok((trainer.into_log(), summary))
}

/// Same loop with the per-attribute shaped pick reward and no relabeling.
pub fn shaped_variant(mut config: TrainConfig) -> Result<(MetricsLog, RunSummary)> {
    if config.strategy.relabels() {
        bail!(Config, "shaped rewards cannot be combined with relabeling");
    }
    config.reward_mode = RewardMode::Shaped;
    train(config)
}
