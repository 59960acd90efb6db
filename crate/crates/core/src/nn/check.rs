use alloc::format;

use super::params::{Gradients, ParameterSet, Real};
use crate::error::{Error, Result};

/// A scalar loss over a parameter set with its analytic gradient.
pub trait Objective<T: Real> {
    fn loss(&self, params: &ParameterSet<T>) -> T;
    fn loss_and_gradients(&self, params: &ParameterSet<T>) -> (T, Gradients<T>);
}

/// Analytic gradients, rejecting non-finite losses or gradients.
pub fn gradients<T: Real, O: Objective<T>>(
    params: &ParameterSet<T>,
    objective: &O,
) -> Result<(T, Gradients<T>)> {
    let (loss, grads) = objective.loss_and_gradients(params);
    if !loss.is_finite() {
        return Err(Error::Numerical(format!(
            "loss is {:?}; parameter norm {:?}",
            loss,
            params.l2_norm()
        )));
    }
    if !grads.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite gradient at loss {loss:?}"
        )));
    }
    Ok((loss, grads))
}

/// Relative errors below this denominator are measured against it, so
/// coordinates with vanishing gradient do not amplify round-off.
const RELATIVE_FLOOR: f64 = 1e-6;

/// Largest relative error between analytic and central-difference gradients
/// over every parameter coordinate.
pub fn finite_diff_check<T: Real, O: Objective<T>>(
    params: &ParameterSet<T>,
    objective: &O,
    epsilon: f64,
) -> f64 {
    finite_diff_check_subset(params, objective, epsilon, 0..params.len())
}

/// As [`finite_diff_check`], restricted to the given flat coordinates.
pub fn finite_diff_check_subset<T: Real, O: Objective<T>>(
    params: &ParameterSet<T>,
    objective: &O,
    epsilon: f64,
    coordinates: impl IntoIterator<Item = usize>,
) -> f64 {
    let (_, analytic) = objective.loss_and_gradients(params);
    let analytic: alloc::vec::Vec<f64> = analytic.iter_values().map(|v| v.as_f64()).collect();
    let mut probe = params.clone();
    let eps = T::of(epsilon);
    let mut worst = 0.0f64;
    for i in coordinates {
        let original = probe.flat(i).expect("coordinate in range");
        set_flat(&mut probe, i, original + eps);
        let plus = objective.loss(&probe).as_f64();
        set_flat(&mut probe, i, original - eps);
        let minus = objective.loss(&probe).as_f64();
        set_flat(&mut probe, i, original);
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

fn set_flat<T: Real>(params: &mut ParameterSet<T>, index: usize, value: T) {
    if let Some(slot) = params.flat_mut(index) {
        *slot = value;
    }
}
