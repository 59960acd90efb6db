use super::params::{ParameterSet, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LrSchedule {
    Constant(f64),
    /// Linear interpolation from `start` to `end` over `steps` updates.
    Linear { start: f64, end: f64, steps: u64 },
}

impl LrSchedule {
    pub fn at(&self, step: u64) -> f64 {
        match *self {
            LrSchedule::Constant(lr) => lr,
            LrSchedule::Linear { start, end, steps } => {
                if steps == 0 || step >= steps {
                    end
                } else {
                    start + (end - start) * step as f64 / steps as f64
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub lr: LrSchedule,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Gradients with a larger global L2 norm are rescaled to this norm.
    pub max_grad_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: LrSchedule::Constant(1e-3),
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_grad_norm: None,
        }
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    m: ParameterSet<T>,
    v: ParameterSet<T>,
    step: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, params: &ParameterSet<T>) -> Self {
        Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &ParameterSet<T> {
        &self.m
    }

    pub fn second_moment(&self) -> &ParameterSet<T> {
        &self.v
    }

    pub fn step(&mut self, params: &mut ParameterSet<T>, grads: &ParameterSet<T>) {
        debug_assert!(params.same_layout(grads) && params.same_layout(&self.m));
        let c = &self.config;
        let lr = T::of(c.lr.at(self.step));
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::of(c.beta1);
        let b2 = T::of(c.beta2);
        let eps = T::of(c.epsilon);
        let correction1 = T::one() - b1.powi(t);
        let correction2 = T::one() - b2.powi(t);
        let clip = match c.max_grad_norm {
            Some(max) => {
                let norm = grads.l2_norm().as_f64();
                if norm > max {
                    T::of(max / norm)
                } else {
                    T::one()
                }
            }
            None => T::one(),
        };
        let step_size = lr / correction1;
        let arrays = params
            .params_mut()
            .iter_mut()
            .zip(grads.params())
            .zip(self.m.params_mut().iter_mut().zip(self.v.params_mut().iter_mut()));
        for ((p, g), (m, v)) in arrays {
            let lanes = p
                .values
                .iter_mut()
                .zip(&g.values)
                .zip(m.values.iter_mut().zip(v.values.iter_mut()));
            for ((p, &g), (m, v)) in lanes {
                let g = g * clip;
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                *p -= step_size * *m / ((*v / correction2).sqrt() + eps);
            }
        }
    }
}
