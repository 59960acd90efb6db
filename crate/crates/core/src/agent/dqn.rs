use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::policy::{argmax, select_action};
use super::qnet::{FeatureEncoder, QCache, QNetwork};
use super::replay::PrioritizedBuffer;
use super::Transition;
use crate::error::{bail, Result};
use crate::gridworld::{Action, Observation};
use crate::language::Goal;
use crate::nn::{Adam, AdamConfig, Gradients, LrSchedule, Objective, ParameterSet, Real};
use crate::rng::LabRng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub batch_size: usize,
    /// Hard target-network copy every this many TD updates.
    pub target_sync_every: u64,
    pub adam: AdamConfig,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            gamma: 0.95,
            batch_size: 32,
            target_sync_every: 1000,
            adam: AdamConfig {
                lr: LrSchedule::Constant(5e-4),
                max_grad_norm: Some(10.0),
                ..AdamConfig::default()
            },
        }
    }
}

/// `r` for terminal transitions, otherwise `r + γ·Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_q_value<T: Real>(
    reward: T,
    done: bool,
    gamma: T,
    online_next: &[T],
    target_next: &[T],
) -> T {
    if done {
        reward
    } else {
        reward + gamma * target_next[argmax(online_next)]
    }
}

/// Double-Q bootstrap target of one transition.
pub fn double_q_target<T: Real>(
    online: &QNetwork<T>,
    target: &QNetwork<T>,
    t: &Transition,
    gamma: T,
) -> T {
    let reward = T::of(t.reward as f64);
    if t.done {
        return reward;
    }
    let features = online.encoder.encode(&t.next_observation, &t.goal);
    let mut on = online.cache();
    let mut tg = target.cache();
    online.forward(&features, &mut on);
    target.forward(&features, &mut tg);
    double_q_value(reward, false, gamma, &on.q, &tg.q)
}

/// Importance-weighted squared TD loss of a batch with fixed targets:
/// `Σ_i w_i · ½ (Q(s_i, a_i) - y_i)² / B`.
pub struct TdBatchLoss<'a, T> {
    pub net: &'a QNetwork<T>,
    pub features: Vec<Vec<u32>>,
    pub actions: Vec<usize>,
    pub targets: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> TdBatchLoss<'_, T> {
    /// Loss and per-sample TD errors; accumulates gradients when given.
    pub fn evaluate(
        &self,
        params: &ParameterSet<T>,
        mut grads: Option<&mut ParameterSet<T>>,
    ) -> (T, Vec<T>) {
        let scale = T::one() / T::of(self.features.len() as f64);
        let mut cache: QCache<T> = self.net.cache();
        let mut dq = vec![T::zero(); self.net.num_actions];
        let mut loss = T::zero();
        let mut errors = Vec::with_capacity(self.features.len());
        for i in 0..self.features.len() {
            self.net.forward_with(params, &self.features[i], &mut cache);
            let a = self.actions[i];
            let delta = cache.q[a] - self.targets[i];
            let w = self.weights[i] * scale;
            loss += T::of(0.5) * w * delta * delta;
            errors.push(delta);
            if let Some(g) = grads.as_deref_mut() {
                dq.iter_mut().for_each(|v| *v = T::zero());
                dq[a] = w * delta;
                self.net
                    .backward_with(params, &self.features[i], &cache, &dq, g);
            }
        }
        (loss, errors)
    }
}

impl<T: Real> Objective<T> for TdBatchLoss<'_, T> {
    fn loss(&self, params: &ParameterSet<T>) -> T {
        self.evaluate(params, None).0
    }

    fn loss_and_gradients(&self, params: &ParameterSet<T>) -> (T, Gradients<T>) {
        let mut g = params.zeros_like();
        let (loss, _) = self.evaluate(params, Some(&mut g));
        (loss, g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdReport {
    pub loss: f64,
    pub indices: Vec<usize>,
    pub td_errors: Vec<f64>,
}

/// Online and target dueling networks with their optimizer.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub config: DqnConfig,
    pub online: QNetwork<f32>,
    pub target: QNetwork<f32>,
    optimizer: Adam<f32>,
    grads: ParameterSet<f32>,
    updates: u64,
}

impl DqnAgent {
    pub fn new(config: DqnConfig, encoder: FeatureEncoder, seed: u64) -> Self {
        let online = QNetwork::new(encoder, &config.hidden, Action::COUNT, seed);
        let target = online.clone();
        let optimizer = Adam::new(config.adam, &online.params);
        let grads = online.params.zeros_like();
        Self {
            config,
            online,
            target,
            optimizer,
            grads,
            updates: 0,
        }
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn q_values(&self, obs: &Observation, goal: &Goal) -> Result<Vec<f32>> {
        self.online.q_values(obs, goal)
    }

    pub fn act(&self, obs: &Observation, goal: &Goal, epsilon: f64, rng: &mut LabRng) -> Result<Action> {
        let q = self.q_values(obs, goal)?;
        Ok(Action::ALL[select_action(&q, epsilon, rng)])
    }

    pub fn sync_target(&mut self) {
        self.target.params.copy_from(&self.online.params);
    }

    /// One prioritized double-DQN step: sample, regress Q(s, a) onto the
    /// double-Q targets, refresh the sampled priorities, and copy the online
    /// weights into the target network every `target_sync_every` updates.
    pub fn td_update(
        &mut self,
        buffer: &mut PrioritizedBuffer<Transition>,
        beta: f64,
        rng: &mut LabRng,
    ) -> Result<TdReport> {
        let sample = buffer.sample(self.config.batch_size, beta, rng)?;
        let gamma = self.config.gamma as f32;
        let encoder = self.online.encoder;
        let mut batch = TdBatchLoss {
            net: &self.online,
            features: Vec::with_capacity(sample.indices.len()),
            actions: Vec::with_capacity(sample.indices.len()),
            targets: Vec::with_capacity(sample.indices.len()),
            weights: sample.weights.iter().map(|&w| w as f32).collect(),
        };
        let mut on = self.online.cache();
        let mut tg = self.target.cache();
        let mut next = Vec::new();
        for &i in &sample.indices {
            let t = buffer.get(i);
            batch.features.push(encoder.encode(&t.observation, &t.goal));
            batch.actions.push(t.action.index());
            let y = if t.done {
                t.reward
            } else {
                encoder.encode_into(&t.next_observation, &t.goal, &mut next);
                self.online.forward(&next, &mut on);
                self.target.forward(&next, &mut tg);
                double_q_value(t.reward, false, gamma, &on.q, &tg.q)
            };
            batch.targets.push(y);
        }

        self.grads.fill_zero();
        let (loss, errors) = batch.evaluate(&self.online.params, Some(&mut self.grads));
        if !loss.is_finite() || !self.grads.is_finite() {
            bail!(
                Numerical,
                "TD loss {loss} after {} updates (targets {:?})",
                self.updates,
                &batch.targets[..batch.targets.len().min(8)]
            );
        }
        drop(batch);
        self.optimizer.step(&mut self.online.params, &self.grads);
        let td_errors: Vec<f64> = errors.iter().map(|&e| e as f64).collect();
        buffer.update_priorities(&sample.indices, &td_errors);
        self.updates += 1;
        if self.updates % self.config.target_sync_every.max(1) == 0 {
            self.sync_target();
        }
        Ok(TdReport {
            loss: loss as f64,
            indices: sample.indices,
            td_errors,
        })
    }

    pub fn describe(&self) -> alloc::string::String {
        format!(
            "dqn(hidden={:?}, params={}, updates={})",
            self.config.hidden,
            self.online.params.len(),
            self.updates
        )
    }
}
