use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::gridworld::{Cardinalities, Observation};
use crate::language::Goal;
use crate::nn::{Dense, Input, ParameterSet, Real, Trunk, TrunkCache};
use crate::rng;

/// Builds the binary input of the Q-network: observation bits followed by the
/// goal's one-hot code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureEncoder {
    pub observation_len: usize,
    pub cards: Cardinalities,
}

impl FeatureEncoder {
    pub fn input_len(&self) -> usize {
        self.observation_len + self.cards.total_values()
    }

    pub fn encode(&self, obs: &Observation, goal: &Goal) -> Vec<u32> {
        let mut out = Vec::with_capacity(obs.active.len() + 4);
        self.encode_into(obs, goal, &mut out);
        out
    }

    pub fn encode_into(&self, obs: &Observation, goal: &Goal, out: &mut Vec<u32>) {
        out.clear();
        out.extend_from_slice(&obs.active);
        let base = self.observation_len as u32;
        out.extend(goal.active_indices(&self.cards).iter().map(|&i| base + i));
    }
}

/// `Q(a) = V + A(a) - mean(A)`.
pub fn dueling_combine<T: Real>(value: T, advantages: &[T]) -> Vec<T> {
    let n = T::of(advantages.len() as f64);
    let mean = advantages.iter().fold(T::zero(), |a, &b| a + b) / n;
    advantages.iter().map(|&a| value + a - mean).collect()
}

/// Dueling UVFA: shared ReLU trunk, a scalar value head and a per-action
/// advantage head.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<T> {
    pub params: ParameterSet<T>,
    pub trunk: Trunk,
    pub value: Dense,
    pub advantage: Dense,
    pub encoder: FeatureEncoder,
    pub num_actions: usize,
}

/// Per-sample activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct QCache<T> {
    pub trunk: TrunkCache<T>,
    pub value: T,
    pub advantages: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Real> QNetwork<T> {
    pub fn new(encoder: FeatureEncoder, hidden: &[usize], num_actions: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut params = ParameterSet::new(seed);
        let trunk = Trunk::new(&mut params, "q.trunk", encoder.input_len(), hidden, &mut rng);
        let width = trunk.output_dim();
        let value = Dense::new(&mut params, "q.value", width, 1, &mut rng);
        let advantage = Dense::new(&mut params, "q.advantage", width, num_actions, &mut rng);
        Self {
            params,
            trunk,
            value,
            advantage,
            encoder,
            num_actions,
        }
    }

    pub fn cache(&self) -> QCache<T> {
        QCache {
            trunk: self.trunk.cache(),
            value: T::zero(),
            advantages: vec![T::zero(); self.num_actions],
            q: vec![T::zero(); self.num_actions],
        }
    }

    fn input<'a>(&self, features: &'a [u32]) -> Input<'a, T> {
        Input::Binary {
            dim: self.encoder.input_len(),
            active: features,
        }
    }

    pub fn q_values(&self, obs: &Observation, goal: &Goal) -> Result<Vec<T>> {
        let features = self.encoder.encode(obs, goal);
        self.trunk.check_input(&self.input(&features))?;
        let mut cache = self.cache();
        self.forward(&features, &mut cache);
        Ok(cache.q)
    }

    /// Forward pass on encoded features; results land in `cache.q`.
    pub fn forward(&self, features: &[u32], cache: &mut QCache<T>) {
        self.forward_with(&self.params, features, cache);
    }

    pub fn forward_with(&self, params: &ParameterSet<T>, features: &[u32], cache: &mut QCache<T>) {
        let input = self.input(features);
        self.trunk.forward(params, input, &mut cache.trunk);
        let hidden = self.trunk.output(input, &cache.trunk);
        let mut v = [T::zero()];
        self.value.forward(params, hidden, &mut v);
        self.advantage.forward(params, hidden, &mut cache.advantages);
        cache.value = v[0];
        let n = T::of(self.num_actions as f64);
        let mean = cache.advantages.iter().fold(T::zero(), |a, &b| a + b) / n;
        for (q, &a) in cache.q.iter_mut().zip(cache.advantages.iter()) {
            *q = cache.value + a - mean;
        }
    }

    /// Accumulates gradients for one sample given `dq = ∂loss/∂Q`.
    pub fn backward_with(
        &self,
        params: &ParameterSet<T>,
        features: &[u32],
        cache: &QCache<T>,
        dq: &[T],
        grads: &mut ParameterSet<T>,
    ) {
        let input = self.input(features);
        let hidden = self.trunk.output(input, &cache.trunk);
        let total = dq.iter().fold(T::zero(), |a, &b| a + b);
        let mean = total / T::of(self.num_actions as f64);
        let dadv: Vec<T> = dq.iter().map(|&g| g - mean).collect();
        let width = self.trunk.output_dim();
        let mut dh = vec![T::zero(); width];
        let mut dh_adv = vec![T::zero(); width];
        self.value
            .backward(params, hidden, &[total], grads, Some(&mut dh));
        self.advantage
            .backward(params, hidden, &dadv, grads, Some(&mut dh_adv));
        for (a, b) in dh.iter_mut().zip(dh_adv) {
            *a += b;
        }
        if !self.trunk.layers.is_empty() {
            self.trunk.backward(params, input, &cache.trunk, &dh, grads);
        }
    }
}
