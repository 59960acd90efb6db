//! Dueling and double-Q formulas, prioritized replay statistics and the
//! exploration policy against direct computations.

use higher_core::agent::{
    argmax, double_q_target, double_q_value, dueling_combine, select_action, FeatureEncoder,
    PrioritizedBuffer, QNetwork, SumTree, Transition, TransitionKind,
};
use higher_core::gridworld::{Action, Attributes, EnvConfig, GridWorld};
use higher_core::rng;
use higher_core::Goal;
use rand::Rng;

#[test]
fn dueling_shift_is_exact_on_representable_values() {
    let adv = [0.5f32, -1.25, 2.0, 0.75];
    for shift in [1.0f32, -4.0, 0.25, 64.0] {
        let moved: Vec<f32> = adv.iter().map(|a| a + shift).collect();
        assert_eq!(dueling_combine(3.0, &adv), dueling_combine(3.0, &moved));
    }
}

#[test]
fn dueling_shift_on_a_network_is_within_rounding() {
    let cfg = EnvConfig::desk();
    let encoder = FeatureEncoder {
        observation_len: cfg.observation_len(),
        cards: cfg.cardinalities,
    };
    let env = GridWorld::new(cfg).unwrap();
    let goal = Goal::new(Attributes::new(0, 1, 2, 0));
    let obs = env.observe(&env.reset(5, goal).unwrap());
    let mut net: QNetwork<f64> = QNetwork::new(encoder, &[32, 32], 4, 1);
    let before = net.q_values(&obs, &goal).unwrap();
    let bias = net.advantage.bias;
    for b in net.params.get_mut(bias) {
        *b += 0.375;
    }
    let after = net.q_values(&obs, &goal).unwrap();
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() <= 8.0 * f64::EPSILON * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn double_q_uses_target_value_of_online_argmax() {
    let online = [1.0f64, 2.0];
    let target = [5.0f64, 3.0];
    assert_eq!(double_q_value(0.5, false, 0.9, &online, &target), 0.5 + 0.9 * 3.0);
    assert_eq!(double_q_value(0.5, true, 0.9, &online, &target), 0.5);
}

#[test]
fn double_q_target_on_networks() {
    let cfg = EnvConfig::desk();
    let encoder = FeatureEncoder {
        observation_len: cfg.observation_len(),
        cards: cfg.cardinalities,
    };
    let env = GridWorld::new(cfg).unwrap();
    let goal = Goal::new(Attributes::new(1, 0, 1, 2));
    let mut s = env.reset(2, goal).unwrap();
    let obs = env.observe(&s);
    env.step(&mut s, Action::Left).unwrap();
    let next = env.observe(&s);
    let online: QNetwork<f64> = QNetwork::new(encoder, &[16], 4, 10);
    let target: QNetwork<f64> = QNetwork::new(encoder, &[16], 4, 11);
    let t = Transition {
        observation: obs,
        action: Action::Left,
        reward: 0.0,
        next_observation: next.clone(),
        done: false,
        goal,
        picked: None,
        kind: TransitionKind::TimeOut,
    };
    let qo = online.q_values(&next, &goal).unwrap();
    let qt = target.q_values(&next, &goal).unwrap();
    let expected = 0.9 * qt[argmax(&qo)];
    assert_eq!(double_q_target(&online, &target, &t, 0.9), expected);
}

#[test]
fn proportional_sampling_frequencies() {
    let mut buf = PrioritizedBuffer::new(2, 1.0, 0.0);
    buf.add(0u8);
    buf.add(1u8);
    buf.update_priorities(&[0, 1], &[1.0, 3.0]);
    let mut r = rng::seeded(3);
    let n = 100_000;
    let mut hits = [0usize; 2];
    for _ in 0..n {
        let s = buf.sample(1, 0.0, &mut r).unwrap();
        hits[s.indices[0]] += 1;
        assert_eq!(s.weights, vec![1.0]);
    }
    let f0 = hits[0] as f64 / n as f64;
    assert!((f0 - 0.25).abs() <= 0.01, "{f0}");
    assert!((hits[1] as f64 / n as f64 - 0.75).abs() <= 0.01);
}

#[test]
fn importance_weights_match_definition() {
    let mut buf = PrioritizedBuffer::new(4, 1.0, 0.0);
    for i in 0..4 {
        buf.add(i);
    }
    buf.update_priorities(&[0, 1, 2, 3], &[1.0, 2.0, 3.0, 4.0]);
    let beta = 0.5;
    let mut r = rng::seeded(4);
    let s = buf.sample(4, beta, &mut r).unwrap();
    let max_w = (4.0f64 * 0.1).powf(-beta);
    for (&i, &w) in s.indices.iter().zip(&s.weights) {
        let p = (i + 1) as f64 / 10.0;
        assert!((w - (4.0 * p).powf(-beta) / max_w).abs() < 1e-12);
    }
}

#[test]
fn tree_root_tracks_leaf_sum_under_random_operations() {
    let mut buf = PrioritizedBuffer::new(257, 0.6, 1e-3);
    let mut r = rng::seeded(5);
    for op in 0..10_000u32 {
        match r.gen_range(0..3) {
            0 => {
                buf.add(op);
            }
            1 if buf.len() >= 8 => {
                let s = buf.sample(8, 0.4, &mut r).unwrap();
                let errs: Vec<f64> = s.indices.iter().map(|_| r.gen_range(0.0..5.0)).collect();
                buf.update_priorities(&s.indices, &errs);
            }
            _ => {
                if buf.len() >= 2 {
                    let _ = buf.sample(2, 1.0, &mut r).unwrap();
                }
            }
        }
        let tree: &SumTree = buf.sum_tree();
        let total = tree.total();
        assert!((total - tree.leaf_sum()).abs() <= 1e-6 * total.max(1.0));
    }
}

#[test]
fn random_policy_is_uniform() {
    let mut r = rng::seeded(6);
    let q = [0.0f32, 10.0, -3.0, 2.0];
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[select_action(&q, 1.0, &mut r)] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
    }
    assert_eq!(select_action(&q, 0.0, &mut r), 1);
}
