//! Offline study of the instruction generator: train on pairs collected by
//! the scripted bot, then measure accuracy on fresh layouts, separately for
//! goals seen in training and goals held out of it.

use higher_core::generator::{
    validation_accuracy, Accuracy, GeneratorConfig, InstructionGenerator, Pair, PairDataset,
};
use higher_core::higher::{run_episode, ScriptedBot};
use higher_core::language::{oracle_describe, split_goals};
use higher_core::rng::{self, LabRng};
use higher_core::{EnvConfig, Goal, GridWorld, OutcomeTag, Vocabulary};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub env: EnvConfig,
    pub generator: GeneratorConfig,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub split_seed: u64,
    /// Fresh pairs per goal set used to measure accuracy.
    pub eval_pairs: usize,
    /// Passes over the training pairs.
    pub epochs: usize,
    pub min_steps: usize,
}

impl StudyConfig {
    pub fn desk() -> Self {
        Self {
            env: EnvConfig::desk(),
            generator: GeneratorConfig::default(),
            sizes: vec![50, 200, 1000],
            seeds: vec![0, 1, 2],
            test_fraction: 0.2,
            split_seed: 0,
            eval_pairs: 500,
            epochs: 40,
            min_steps: 400,
        }
    }

    pub fn paper() -> Self {
        Self {
            env: EnvConfig::paper(),
            generator: GeneratorConfig {
                hidden: vec![128],
                ..GeneratorConfig::default()
            },
            ..Self::desk()
        }
    }

    pub fn train_steps(&self, size: usize) -> usize {
        let batch = self.generator.batch_size.max(1);
        self.min_steps.max((self.epochs * size).div_ceil(batch))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub size: usize,
    pub seed: u64,
    pub seen: Accuracy,
    pub unseen: Accuracy,
}

/// Mean accuracy per dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    pub size: usize,
    pub seen_full: f64,
    pub unseen_full: f64,
    pub seen_per_attribute: [f64; 4],
    pub unseen_per_attribute: [f64; 4],
}

/// `n` (terminal observation, description of the picked object) pairs from
/// scripted-bot episodes on goals drawn uniformly from `goals`.
pub fn oracle_pairs(env: &GridWorld, goals: &[Goal], n: usize, rng: &mut LabRng) -> Result<Vec<Pair>> {
    if goals.is_empty() {
        return Err(LabError::Usage("no goals to collect pairs for".into()));
    }
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let goal = goals[rng.gen_range(0..goals.len())];
        let state = env.reset(rng::next_seed(rng), goal)?;
        let traj = run_episode(env, state, &mut ScriptedBot)?;
        if let (OutcomeTag::Success, Some(picked), Some(obs)) =
            (traj.outcome, traj.picked, traj.terminal_observation())
        {
            pairs.push(Pair {
                observation: obs.clone(),
                goal: oracle_describe(&picked),
            });
        }
    }
    Ok(pairs)
}

pub fn generator_study(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    let env = GridWorld::new(config.env)?;
    let vocab = Vocabulary::new(config.env.cardinalities)?;
    let split = split_goals(&vocab.universe(), config.test_fraction, config.split_seed)?;
    let obs_len = config.env.observation_len();
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let mut eval_rng = rng::derive(seed, 2);
        let seen = oracle_pairs(&env, &split.train, config.eval_pairs, &mut eval_rng)?;
        let unseen = oracle_pairs(&env, &split.test, config.eval_pairs, &mut eval_rng)?;
        for &size in &config.sizes {
            let mut data_rng = rng::derive(seed, 1);
            let mut dataset = PairDataset::new(0.0);
            for p in oracle_pairs(&env, &split.train, size, &mut data_rng)? {
                dataset.record_pair(p.observation, p.goal);
            }
            let mut generator = InstructionGenerator::new(
                obs_len,
                config.env.cardinalities,
                &config.generator,
                rng::next_seed(&mut rng::derive(seed, 3)),
            );
            generator.train(
                &dataset,
                config.train_steps(size),
                config.generator.batch_size,
                &mut rng::derive(seed, 4),
            )?;
            rows.push(StudyRow {
                size,
                seed,
                seen: validation_accuracy(&generator.model, &seen)?,
                unseen: validation_accuracy(&generator.model, &unseen)?,
            });
        }
    }
    Ok(rows)
}

pub fn summarize(rows: &[StudyRow]) -> Vec<StudyPoint> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let group: Vec<&StudyRow> = rows.iter().filter(|r| r.size == size).collect();
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&StudyRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            StudyPoint {
                size,
                seen_full: mean(&|r| r.seen.full),
                unseen_full: mean(&|r| r.unseen.full),
                seen_per_attribute: std::array::from_fn(|k| mean(&|r| r.seen.per_attribute[k])),
                unseen_per_attribute: std::array::from_fn(|k| mean(&|r| r.unseen.per_attribute[k])),
            }
        })
        .collect()
}
