use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::{Transition, TransitionKind};
use crate::error::{bail, Result};
use crate::rng::LabRng;

/// Binary tree whose internal nodes hold the sum of their children.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let mut node = self.leaves + i;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf `i` such that the cumulative sum before it is `<= mass` and the
    /// cumulative sum through it is `> mass`.
    pub fn find_prefix(&self, mut mass: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.nodes[2 * node];
            if mass < left {
                node *= 2;
            } else {
                mass -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }

    pub fn leaf_sum(&self) -> f64 {
        self.nodes[self.leaves..].iter().sum()
    }
}

/// Binary tree whose internal nodes hold the minimum of their children.
#[derive(Debug, Clone, PartialEq)]
pub struct MinTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl MinTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![f64::INFINITY; 2 * leaves],
        }
    }

    pub fn min(&self) -> f64 {
        self.nodes[1]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let mut node = self.leaves + i;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node].min(self.nodes[2 * node + 1]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplayConfig {
    pub capacity: usize,
    /// Priority exponent α.
    pub alpha: f64,
    /// Importance exponent β at the start of training, annealed to `beta_end`.
    pub beta_start: f64,
    pub beta_end: f64,
    /// Added to |TD error| so that every priority stays positive.
    pub priority_floor: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 50_000,
            alpha: 0.6,
            beta_start: 0.4,
            beta_end: 1.0,
            priority_floor: 1e-3,
        }
    }
}

impl ReplayConfig {
    /// Linearly annealed β at `progress` ∈ [0, 1].
    pub fn beta_at(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.beta_start + (self.beta_end - self.beta_start) * p
    }
}

/// Indices and normalized importance weights of a sampled batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Proportional prioritized replay with FIFO eviction.
///
/// Slot `i` is sampled with probability `p_i^α / Σ_j p_j^α`. New items get
/// the largest priority seen so far (initially 1).
#[derive(Debug, Clone)]
pub struct PrioritizedBuffer<T> {
    capacity: usize,
    alpha: f64,
    floor: f64,
    items: Vec<T>,
    next: usize,
    sums: SumTree,
    mins: MinTree,
    max_priority: f64,
}

impl<T> PrioritizedBuffer<T> {
    pub fn new(capacity: usize, alpha: f64, priority_floor: f64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            alpha,
            floor: priority_floor,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            sums: SumTree::new(capacity),
            mins: MinTree::new(capacity),
            max_priority: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_priority(&self) -> f64 {
        self.max_priority
    }

    pub fn get(&self, i: usize) -> &T {
        &self.items[i]
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn sum_tree(&self) -> &SumTree {
        &self.sums
    }

    /// Raw priority (before the α exponent) of slot `i`.
    pub fn priority(&self, i: usize) -> f64 {
        Float::powf(self.sums.get(i), 1.0 / self.alpha)
    }

    /// Stores `item` at the current max priority and returns the evicted
    /// item once the buffer is full.
    pub fn add(&mut self, item: T) -> Option<T> {
        let slot = self.next;
        let scaled = Float::powf(self.max_priority, self.alpha);
        self.sums.set(slot, scaled);
        self.mins.set(slot, scaled);
        self.next = (self.next + 1) % self.capacity;
        if self.items.len() < self.capacity {
            self.items.push(item);
            None
        } else {
            Some(core::mem::replace(&mut self.items[slot], item))
        }
    }

    /// Stratified proportional sampling of `batch_size` slots with
    /// replacement, plus importance weights `(N·P(i))^(-β)` divided by the
    /// largest possible weight in the buffer.
    pub fn sample(&self, batch_size: usize, beta: f64, rng: &mut LabRng) -> Result<Sample> {
        let n = self.items.len();
        if batch_size == 0 || n < batch_size {
            bail!(Usage, "cannot sample {batch_size} items from a buffer of {n}");
        }
        let total = self.sums.total();
        let segment = total / batch_size as f64;
        let min_prob = self.mins.min() / total;
        let max_weight = Float::powf(n as f64 * min_prob, -beta);
        let mut indices = Vec::with_capacity(batch_size);
        let mut weights = Vec::with_capacity(batch_size);
        for k in 0..batch_size {
            let mass = (k as f64 + rng.gen::<f64>()) * segment;
            let mut i = self.sums.find_prefix(mass.min(total));
            if i >= n || self.sums.get(i) <= 0.0 {
                i = self.last_nonzero_before(i.min(n - 1));
            }
            let prob = self.sums.get(i) / total;
            indices.push(i);
            weights.push(Float::powf(n as f64 * prob, -beta) / max_weight);
        }
        Ok(Sample { indices, weights })
    }

    fn last_nonzero_before(&self, mut i: usize) -> usize {
        while i > 0 && self.sums.get(i) <= 0.0 {
            i -= 1;
        }
        i
    }

    /// Sets the raw priority of the given slots to `|error| + floor`.
    pub fn update_priorities(&mut self, indices: &[usize], errors: &[f64]) {
        for (&i, &e) in indices.iter().zip(errors) {
            let p = e.abs() + self.floor;
            self.max_priority = self.max_priority.max(p);
            let scaled = Float::powf(p, self.alpha);
            self.sums.set(i, scaled);
            self.mins.set(i, scaled);
        }
    }

    /// Histogram of raw priorities over `bins` equal-width bins on
    /// `[0, max_priority]`.
    pub fn priority_histogram(&self, bins: usize) -> Vec<usize> {
        let mut hist = vec![0; bins.max(1)];
        let width = self.max_priority / hist.len() as f64;
        for i in 0..self.items.len() {
            let b = ((self.priority(i) / width) as usize).min(hist.len() - 1);
            hist[b] += 1;
        }
        hist
    }
}

/// Counts of stored transitions by [`TransitionKind`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Composition {
    pub counts: [usize; 4],
}

impl Composition {
    pub fn add(&mut self, kind: TransitionKind) {
        self.counts[kind.index()] += 1;
    }

    pub fn remove(&mut self, kind: TransitionKind) {
        self.counts[kind.index()] -= 1;
    }

    pub fn count(&self, kind: TransitionKind) -> usize {
        self.counts[kind.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Share of each kind in `[positive, negative, relabeled, time_out]`
    /// order; all zero for an empty buffer.
    pub fn fractions(&self) -> [f64; 4] {
        let total = self.total();
        if total == 0 {
            return [0.0; 4];
        }
        self.counts.map(|c| c as f64 / total as f64)
    }
}

/// Snapshot of buffer state for reporting.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BufferStats {
    pub size: usize,
    pub capacity: usize,
    pub composition: Composition,
    pub priority_histogram: Vec<usize>,
}

impl PrioritizedBuffer<Transition> {
    /// Adds a transition and keeps `composition` in step with the eviction.
    pub fn add_tracked(&mut self, t: Transition, composition: &mut Composition) {
        composition.add(t.kind);
        if let Some(old) = self.add(t) {
            composition.remove(old.kind);
        }
    }

    pub fn composition(&self) -> Composition {
        let mut c = Composition::default();
        for t in &self.items {
            c.add(t.kind);
        }
        c
    }

    pub fn stats(&self, bins: usize) -> BufferStats {
        BufferStats {
            size: self.len(),
            capacity: self.capacity,
            composition: self.composition(),
            priority_histogram: self.priority_histogram(bins),
        }
    }
}
