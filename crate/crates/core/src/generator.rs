//! Instruction generator: predicts the goal an episode achieved from its
//! terminal observation.
//!
//! The model is trained only on the agent's own successful episodes, whose
//! `⟨terminal observation, goal⟩` pairs are ground truth by construction. A
//! held-out validation split measures it, and the gate decides when its
//! predictions are trusted for relabeling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::gridworld::{Attributes, Cardinalities, Observation, NUM_ATTRIBUTES};
use crate::language::Goal;
use crate::nn::{
    softmax, softmax_cross_entropy, Adam, AdamConfig, Gradients, Input, LrSchedule, Mlp,
    Objective, ParameterSet, Real, TrunkCache,
};
use crate::rng::LabRng;

/// A ground-truth `⟨terminal observation, goal⟩` pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pair {
    pub observation: Observation,
    pub goal: Goal,
}

/// Growing multiset of pairs, routed deterministically to the train or
/// validation split: insert `k` (0-based) goes to validation exactly when
/// `floor((k+1)·f) > floor(k·f)` for validation fraction `f`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairDataset {
    pub train: Vec<Pair>,
    pub val: Vec<Pair>,
    pub val_fraction: f64,
    pub inserted: u64,
}

impl PairDataset {
    pub fn new(val_fraction: f64) -> Self {
        Self {
            train: Vec::new(),
            val: Vec::new(),
            val_fraction,
            inserted: 0,
        }
    }

    fn routes_to_val(&self, k: u64) -> bool {
        const SLACK: f64 = 1e-9;
        let f = self.val_fraction;
        let before = num_traits::Float::floor(k as f64 * f + SLACK);
        let after = num_traits::Float::floor((k + 1) as f64 * f + SLACK);
        after > before
    }

    pub fn record_pair(&mut self, observation: Observation, goal: Goal) {
        let pair = Pair { observation, goal };
        if self.routes_to_val(self.inserted) {
            self.val.push(pair);
        } else {
            self.train.push(pair);
        }
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Anything mapping a terminal observation to a goal.
pub trait GoalPredictor {
    fn predict(&self, observation: &Observation) -> Goal;
}

/// MLP over the terminal observation with one categorical head per
/// attribute; the head logits are consecutive slices of the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel<T> {
    pub net: Mlp<T>,
    pub cards: Cardinalities,
}

impl<T: Real> GeneratorModel<T> {
    pub fn new(observation_len: usize, cards: Cardinalities, hidden: &[usize], seed: u64) -> Self {
        Self {
            net: Mlp::new(observation_len, hidden, cards.total_values(), seed),
            cards,
        }
    }

    pub fn params(&self) -> &ParameterSet<T> {
        &self.net.params
    }

    fn input<'a>(&self, obs: &'a Observation) -> Input<'a, T> {
        Input::Binary {
            dim: self.net.trunk.input_dim,
            active: &obs.active,
        }
    }

    pub fn logits(&self, obs: &Observation) -> Result<Vec<T>> {
        self.net.forward(self.input(obs))
    }

    /// Per-attribute class probabilities.
    pub fn head_probabilities(&self, obs: &Observation) -> Result<[Vec<T>; NUM_ATTRIBUTES]> {
        let logits = self.logits(obs)?;
        let offsets = self.cards.offsets();
        Ok(core::array::from_fn(|k| {
            let start = offsets[k];
            softmax(&logits[start..start + self.cards.get(k) as usize])
        }))
    }

    /// Per-head argmax assembled into a goal; ties go to the lowest index.
    pub fn predict_goal(&self, obs: &Observation) -> Result<Goal> {
        let logits = self.logits(obs)?;
        Ok(self.decode(&logits))
    }

    fn decode(&self, logits: &[T]) -> Goal {
        let offsets = self.cards.offsets();
        let mut values = [0u8; NUM_ATTRIBUTES];
        for k in 0..NUM_ATTRIBUTES {
            let head = &logits[offsets[k]..offsets[k] + self.cards.get(k) as usize];
            values[k] = crate::agent::argmax(head) as u8;
        }
        Goal::new(Attributes::from_array(values))
    }
}

impl<T: Real> GoalPredictor for GeneratorModel<T> {
    fn predict(&self, observation: &Observation) -> Goal {
        let mut cache: TrunkCache<T> = self.net.trunk.cache();
        let logits = self.net.forward_cached(self.input(observation), &mut cache);
        self.decode(&logits)
    }
}

/// Summed per-head cross-entropy, averaged over a batch of pairs.
pub struct GeneratorLoss<'a, T> {
    pub model: &'a GeneratorModel<T>,
    pub batch: Vec<&'a Pair>,
}

impl<T: Real> GeneratorLoss<'_, T> {
    pub fn evaluate(&self, params: &ParameterSet<T>, mut grads: Option<&mut ParameterSet<T>>) -> T {
        let net = &self.model.net;
        let cards = &self.model.cards;
        let offsets = cards.offsets();
        let scale = T::one() / T::of(self.batch.len() as f64);
        let mut cache = net.trunk.cache();
        let mut loss = T::zero();
        let mut dlogits = vec![T::zero(); cards.total_values()];
        for pair in &self.batch {
            let input = self.model.input(&pair.observation);
            let logits = net.forward_with(params, input, &mut cache);
            for k in 0..NUM_ATTRIBUTES {
                let range = offsets[k]..offsets[k] + cards.get(k) as usize;
                let (l, g) = softmax_cross_entropy(&logits[range.clone()], pair.goal.attrs.get(k) as usize);
                loss += l * scale;
                for (d, gi) in dlogits[range].iter_mut().zip(g) {
                    *d = gi * scale;
                }
            }
            if let Some(grads) = grads.as_deref_mut() {
                net.backward_with(params, input, &cache, &dlogits, grads);
            }
        }
        loss
    }
}

impl<T: Real> Objective<T> for GeneratorLoss<'_, T> {
    fn loss(&self, params: &ParameterSet<T>) -> T {
        self.evaluate(params, None)
    }

    fn loss_and_gradients(&self, params: &ParameterSet<T>) -> (T, Gradients<T>) {
        let mut g = params.zeros_like();
        let loss = self.evaluate(params, Some(&mut g));
        (loss, g)
    }
}

/// When the generator is trusted to relabel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "mode"))]
pub enum GateConfig {
    /// Validation accuracy and validation-set size both above thresholds.
    Threshold { min_accuracy: f64, min_val_size: usize },
    /// A fixed number of positive trajectories has been collected.
    PositiveCount { min_positives: u64 },
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig::PositiveCount {
            min_positives: 1000,
        }
    }
}

pub fn gate_open(accuracy: f64, val_size: usize, positives: u64, gate: &GateConfig) -> bool {
    match *gate {
        GateConfig::Threshold {
            min_accuracy,
            min_val_size,
        } => val_size >= min_val_size.max(1) && accuracy >= min_accuracy,
        GateConfig::PositiveCount { min_positives } => positives >= min_positives,
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorConfig {
    pub hidden: Vec<usize>,
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Minibatch steps after each successful episode.
    pub steps_per_success: usize,
    pub val_fraction: f64,
    /// Validation accuracy is refreshed after this many new pairs.
    pub eval_every_pairs: u64,
    pub gate: GateConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            adam: AdamConfig {
                lr: LrSchedule::Constant(1e-3),
                ..AdamConfig::default()
            },
            batch_size: 32,
            steps_per_success: 2,
            val_fraction: 0.1,
            eval_every_pairs: 20,
            gate: GateConfig::default(),
        }
    }
}

/// Full-goal and per-attribute accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Accuracy {
    pub full: f64,
    pub per_attribute: [f64; NUM_ATTRIBUTES],
}

/// A prediction counts toward `full` only if all four attributes match.
pub fn validation_accuracy<P: GoalPredictor + ?Sized>(model: &P, pairs: &[Pair]) -> Result<Accuracy> {
    if pairs.is_empty() {
        bail!(Usage, "accuracy needs at least one pair");
    }
    let mut full = 0usize;
    let mut per = [0usize; NUM_ATTRIBUTES];
    for pair in pairs {
        let pred = model.predict(&pair.observation);
        if pred == pair.goal {
            full += 1;
        }
        for (k, count) in per.iter_mut().enumerate() {
            if pred.attrs.get(k) == pair.goal.attrs.get(k) {
                *count += 1;
            }
        }
    }
    let n = pairs.len() as f64;
    Ok(Accuracy {
        full: full as f64 / n,
        per_attribute: per.map(|c| c as f64 / n),
    })
}

/// Model plus optimizer state.
#[derive(Debug, Clone)]
pub struct InstructionGenerator {
    pub model: GeneratorModel<f32>,
    pub optimizer: Adam<f32>,
    grads: ParameterSet<f32>,
}

impl InstructionGenerator {
    pub fn new(observation_len: usize, cards: Cardinalities, config: &GeneratorConfig, seed: u64) -> Self {
        let model = GeneratorModel::new(observation_len, cards, &config.hidden, seed);
        let optimizer = Adam::new(config.adam, model.params());
        let grads = model.params().zeros_like();
        Self {
            model,
            optimizer,
            grads,
        }
    }

    /// `steps` Adam updates on minibatches drawn uniformly with replacement
    /// from the train split; returns the mean minibatch loss.
    pub fn train(
        &mut self,
        dataset: &PairDataset,
        steps: usize,
        batch_size: usize,
        rng: &mut LabRng,
    ) -> Result<f64> {
        train_generator(self, dataset, steps, batch_size, rng)
    }

    pub fn predict_goal(&self, obs: &Observation) -> Result<Goal> {
        self.model.predict_goal(obs)
    }
}

pub fn train_generator(
    generator: &mut InstructionGenerator,
    dataset: &PairDataset,
    steps: usize,
    batch_size: usize,
    rng: &mut LabRng,
) -> Result<f64> {
    if dataset.train.is_empty() {
        bail!(Usage, "cannot train the generator on an empty train split");
    }
    let mut total = 0.0;
    for _ in 0..steps {
        let batch: Vec<&Pair> = (0..batch_size.max(1))
            .map(|_| &dataset.train[rng.gen_range(0..dataset.train.len())])
            .collect();
        let objective = GeneratorLoss {
            model: &generator.model,
            batch,
        };
        generator.grads.fill_zero();
        let loss = objective.evaluate(generator.model.params(), Some(&mut generator.grads));
        if !loss.is_finite() || !generator.grads.is_finite() {
            bail!(Numerical, "generator loss {loss} with {} train pairs", dataset.train.len());
        }
        generator
            .optimizer
            .step(&mut generator.model.net.params, &generator.grads);
        total += loss as f64;
    }
    Ok(if steps == 0 { 0.0 } else { total / steps as f64 })
}
