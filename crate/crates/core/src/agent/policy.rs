use rand::Rng;

use crate::nn::Real;
use crate::rng::LabRng;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy: a uniformly random action with probability `epsilon`, else the
/// greedy one.
pub fn select_action<T: Real>(qvals: &[T], epsilon: f64, rng: &mut LabRng) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..qvals.len())
    } else {
        argmax(qvals)
    }
}

/// Linear decay from `start` to `end` over `decay_steps`, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: 100_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.decay_steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn greedy_picks_argmax() {
        let mut r = rng::seeded(0);
        assert_eq!(select_action(&[0.0f32, 3.0, 1.0, 2.0], 0.0, &mut r), 1);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let mut r = rng::seeded(0);
        assert_eq!(select_action(&[5.0f32, 5.0, 0.0, 0.0], 0.0, &mut r), 0);
    }

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let s = EpsilonSchedule {
            start: 1.0,
            end: 0.1,
            decay_steps: 1000,
        };
        assert_eq!(s.at(0), 1.0);
        assert_eq!(s.at(1000), 0.1);
        assert_eq!(s.at(5000), 0.1);
        assert!((s.at(500) - 0.55).abs() < 1e-12);
    }
}
