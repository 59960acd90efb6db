use alloc::vec::Vec;

use super::params::Real;

pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = logits
        .iter()
        .fold(T::zero(), |a, &z| a + (z - max).exp())
        .ln()
        + max;
    logits.iter().map(|&z| z - lse).collect()
}

/// Cross-entropy of `softmax(logits)` against class `target`, with its
/// gradient with respect to the logits (`softmax - onehot`).
pub fn softmax_cross_entropy<T: Real>(logits: &[T], target: usize) -> (T, Vec<T>) {
    let logp = log_softmax(logits);
    let loss = -logp[target];
    let mut grad: Vec<T> = logp.iter().map(|&l| l.exp()).collect();
    grad[target] -= T::one();
    (loss, grad)
}

/// `0.5 * weight * (prediction - target)^2` and its derivative in `prediction`.
pub fn weighted_squared_error<T: Real>(prediction: T, target: T, weight: T) -> (T, T) {
    let diff = prediction - target;
    (T::of(0.5) * weight * diff * diff, weight * diff)
}
