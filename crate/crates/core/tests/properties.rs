//! Invariants over randomly generated inputs.

use higher_core::agent::{argmax, dueling_combine, select_action, PrioritizedBuffer};
use higher_core::generator::{gate_open, GateConfig, PairDataset};
use higher_core::gridworld::{
    satisfies, shaped_reward, Action, Attributes, Cardinalities, EnvConfig, GridWorld,
    Observation, OutcomeTag, CH_OBJECT,
};
use higher_core::language::{
    noisy_describe, oracle_describe, parse_instruction, render_instruction, split_goals,
};
use higher_core::rng;
use higher_core::{Goal, ObjectSpec, Pos, Vocabulary};
use proptest::prelude::*;

fn attrs(cards: Cardinalities) -> impl Strategy<Value = Attributes> {
    (0..cards.universe_size()).prop_map(move |i| cards.from_index(i))
}

fn actions(max: usize) -> impl Strategy<Value = Vec<Action>> {
    prop::collection::vec((0..4usize).prop_map(|i| Action::ALL[i]), 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn episodes_are_deterministic_and_bounded(
        seed in any::<u64>(),
        goal in attrs(Cardinalities::DESK),
        acts in actions(60),
    ) {
        let cfg = EnvConfig::desk();
        let env = GridWorld::new(cfg).unwrap();
        let goal = Goal::new(goal);
        let mut a = env.reset(seed, goal).unwrap();
        let mut b = env.reset(seed, goal).unwrap();
        prop_assert_eq!(&a, &b);
        for act in acts {
            if a.is_terminal() {
                prop_assert!(env.step(&mut a, act).is_err());
                break;
            }
            let ra = env.step(&mut a, act).unwrap();
            let rb = env.step(&mut b, act).unwrap();
            prop_assert_eq!(ra, rb);
            prop_assert_eq!(env.observe(&a), env.observe(&b));
            prop_assert!(a.steps_elapsed <= cfg.max_steps);
            prop_assert!(ra.reward == 0.0 || ra.reward == 1.0);
            if ra.reward == 1.0 {
                prop_assert!(ra.done && ra.outcome == Some(OutcomeTag::Success));
            }
            prop_assert_eq!(a.picked.is_some(), matches!(a.outcome, Some(OutcomeTag::Success | OutcomeTag::WrongPick)));
            prop_assert!(a.object_at(a.agent_pos).is_none());
        }
    }

    #[test]
    fn layouts_are_valid(seed in any::<u64>(), goal in attrs(Cardinalities::PAPER)) {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let s = env.reset(seed, Goal::new(goal)).unwrap();
        prop_assert_eq!(s.objects.len(), 10);
        prop_assert_eq!(s.objects.iter().filter(|o| o.attrs == goal).count(), 1);
        for (i, o) in s.objects.iter().enumerate() {
            prop_assert!(s.is_free(o.pos) || s.object_at(o.pos).is_some());
            prop_assert!(!s.is_wall(o.pos) && s.in_bounds(o.pos));
            prop_assert!(s.objects[i + 1..].iter().all(|p| p.pos != o.pos));
            prop_assert!(Cardinalities::PAPER.contains(&o.attrs));
        }
        prop_assert!(s.is_free(s.agent_pos));
    }

    #[test]
    fn observation_has_one_occupancy_class_per_cell(seed in any::<u64>(), goal in attrs(Cardinalities::PAPER)) {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let s = env.reset(seed, Goal::new(goal)).unwrap();
        let obs: Observation = env.observe(&s);
        prop_assert!(obs.active.windows(2).all(|w| w[0] < w[1]));
        for r in 0..7 {
            for c in 0..7 {
                let cell: Vec<usize> = obs.cell(r, c).collect();
                prop_assert_eq!(cell.iter().filter(|&&ch| ch < 4).count(), 1);
                prop_assert_eq!(cell.len(), if cell.contains(&CH_OBJECT) { 5 } else { 1 });
            }
        }
    }

    #[test]
    fn shaped_reward_is_one_exactly_on_matches(o in attrs(Cardinalities::PAPER), g in attrs(Cardinalities::PAPER)) {
        let goal = Goal::new(g);
        prop_assert_eq!(shaped_reward(&o, &goal) == 1.0, satisfies(&o, &goal));
        prop_assert_eq!(satisfies(&o, &goal), satisfies(&g, &Goal::new(o)));
        prop_assert!(satisfies(&o, &Goal::new(o)));
    }

    #[test]
    fn render_parse_round_trip(g in attrs(Cardinalities::PAPER)) {
        let vocab = Vocabulary::new(Cardinalities::PAPER).unwrap();
        let goal = Goal::new(g);
        let tokens = render_instruction(&vocab, &goal).unwrap();
        prop_assert_eq!(parse_instruction(&vocab, &tokens).unwrap(), goal);
        prop_assert_eq!(goal.encode(&Cardinalities::PAPER).len(), 17);
    }

    #[test]
    fn splits_are_disjoint_covering_partitions(seed in any::<u64>(), fraction in 0.1f64..0.5) {
        let universe: Vec<Goal> = Cardinalities::PAPER.universe().map(Goal::new).collect();
        let split = split_goals(&universe, fraction, seed).unwrap();
        prop_assert_eq!(split.train.len() + split.test.len(), 300);
        prop_assert!(split.test.iter().all(|g| !split.is_train(g)));
        for k in 0..4 {
            for v in 0..Cardinalities::PAPER.get(k) {
                prop_assert!(split.train.iter().any(|g| g.attrs.get(k) == v));
                prop_assert!(split.test.iter().any(|g| g.attrs.get(k) == v));
            }
        }
    }

    #[test]
    fn zero_noise_is_the_oracle(o in attrs(Cardinalities::PAPER), seed in any::<u64>()) {
        let obj = ObjectSpec { attrs: o, pos: Pos::new(1, 1) };
        let mut r = rng::seeded(seed);
        prop_assert_eq!(noisy_describe(&obj, 0.0, &Cardinalities::PAPER, &mut r), oracle_describe(&obj));
        let noisy = noisy_describe(&obj, 0.5, &Cardinalities::PAPER, &mut r);
        prop_assert!(Cardinalities::PAPER.contains(&noisy.attrs));
    }

    #[test]
    fn dueling_shift_changes_no_q_value(
        v in -8i32..8,
        adv in prop::collection::vec(-64i32..64, 4),
        shift in -64i32..64,
    ) {
        // Quarter-integer values keep every sum exact in f64.
        let a: Vec<f64> = adv.iter().map(|&x| x as f64 / 4.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + shift as f64 / 4.0).collect();
        prop_assert_eq!(dueling_combine(v as f64, &a), dueling_combine(v as f64, &b));
    }

    #[test]
    fn greedy_choice_ignores_constant_offsets(q in prop::collection::vec(-100i32..100, 4), c in -50i32..50, seed in any::<u64>()) {
        let a: Vec<f64> = q.iter().map(|&x| x as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + c as f64).collect();
        let mut r = rng::seeded(seed);
        prop_assert_eq!(select_action(&a, 0.0, &mut r), select_action(&b, 0.0, &mut r));
        let best = argmax(&a);
        prop_assert!(a.iter().all(|&x| x <= a[best]));
        prop_assert!(a[..best].iter().all(|&x| x < a[best]));
    }

    #[test]
    fn sum_tree_stays_consistent(
        ops in prop::collection::vec((0u8..3, 0.0f64..10.0), 1..400),
        capacity in 1usize..70,
        seed in any::<u64>(),
    ) {
        let mut buf = PrioritizedBuffer::new(capacity, 0.6, 1e-3);
        let mut r = rng::seeded(seed);
        for (i, (op, err)) in ops.into_iter().enumerate() {
            match op {
                0 => { buf.add(i); }
                1 if !buf.is_empty() => {
                    let s = buf.sample(1, 0.5, &mut r).unwrap();
                    prop_assert!(s.indices[0] < buf.len());
                    prop_assert!(s.weights[0] > 0.0 && s.weights[0] <= 1.0 + 1e-12);
                    buf.update_priorities(&s.indices, &[err]);
                }
                _ => {}
            }
            let t = buf.sum_tree();
            prop_assert!((t.total() - t.leaf_sum()).abs() <= 1e-6 * t.total().max(1.0));
            prop_assert!(buf.len() <= capacity);
        }
    }

    #[test]
    fn gate_is_monotone(
        a in 0.0f64..1.0, da in 0.0f64..1.0,
        n in 0usize..100, dn in 0usize..100,
        pos in 0u64..3000, dpos in 0u64..3000,
        thr in 0.0f64..1.0, min_val in 0usize..50, min_pos in 0u64..2000,
    ) {
        for gate in [
            GateConfig::Threshold { min_accuracy: thr, min_val_size: min_val },
            GateConfig::PositiveCount { min_positives: min_pos },
        ] {
            if gate_open(a, n, pos, &gate) {
                prop_assert!(gate_open(a + da, n + dn, pos + dpos, &gate));
            }
        }
    }

    #[test]
    fn each_pair_lands_in_one_split(fraction in 0.0f64..0.9, count in 0usize..200) {
        let mut ds = PairDataset::new(fraction);
        let obs = Observation { view_size: 1, channels: 1, active: vec![] };
        for i in 0..count {
            ds.record_pair(obs.clone(), Goal::new(Cardinalities::DESK.from_index(i % 36)));
            prop_assert_eq!(ds.train.len() + ds.val.len(), i + 1);
        }
        let expected = (count as f64 * fraction + 1e-9).floor() as usize;
        prop_assert_eq!(ds.val.len(), expected);
    }
}
