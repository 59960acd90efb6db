//! Acceptance checks. Prints one `PASS` or `FAIL` line per criterion and
//! exits non-zero if any fails. The end-to-end runs use the desk defaults and
//! dominate the runtime.

use std::process::{Command, ExitCode, Stdio};
use std::time::Instant;

use higher_core::agent::{
    double_q_value, dueling_combine, FeatureEncoder, PrioritizedBuffer, QNetwork, TdBatchLoss,
};
use higher_core::generator::{
    validation_accuracy, GeneratorConfig, GeneratorLoss, GeneratorModel, InstructionGenerator,
    Pair, PairDataset,
};
use higher_core::gridworld::{satisfies, shaped_reward, Attributes, Cardinalities, EnvConfig, GridWorld, ObjectSpec, Pos};
use higher_core::higher::{run_episode, RelabelStrategy, ScriptedBot, TrainConfig, Trainer};
use higher_core::language::{noisy_describe, oracle_describe};
use higher_core::metrics::{mean_std, MetricsLog, RunSummary};
use higher_core::nn::{finite_diff_check, finite_diff_check_subset};
use higher_core::rng;
use higher_core::Goal;
use higher_lab::study::{generator_study, summarize, StudyConfig};
use rand::Rng;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn predicate_exactness(r: &mut Report) {
    let start = Instant::now();
    let universe: Vec<Attributes> = Cardinalities::PAPER.universe().collect();
    let mut diagonal = 0usize;
    let mut off_diagonal = 0usize;
    let mut shaped_agrees = true;
    for (i, o) in universe.iter().enumerate() {
        for (j, g) in universe.iter().enumerate() {
            let goal = Goal::new(*g);
            let s = satisfies(o, &goal);
            match (s, i == j) {
                (true, true) => diagonal += 1,
                (true, false) => off_diagonal += 1,
                _ => {}
            }
            shaped_agrees &= (shaped_reward(o, &goal) == 1.0) == s;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "predicate exactness",
        diagonal == 300 && off_diagonal == 0 && shaped_agrees && secs < 1.0,
        format!("{diagonal} diagonal hits, {off_diagonal} off-diagonal, shaped agrees {shaped_agrees}, {secs:.3}s"),
    );
}

fn gradient_correctness(r: &mut Report) {
    let start = Instant::now();
    let cfg = EnvConfig::desk();
    let env = GridWorld::new(cfg).unwrap();
    let universe: Vec<Attributes> = cfg.cardinalities.universe().collect();
    let data: Vec<_> = (0..8u64)
        .map(|i| {
            let goal = Goal::new(universe[(i as usize * 5) % universe.len()]);
            (env.observe(&env.reset(100 + i, goal).unwrap()), goal)
        })
        .collect();
    let encoder = FeatureEncoder {
        observation_len: cfg.observation_len(),
        cards: cfg.cardinalities,
    };
    let net: QNetwork<f64> = QNetwork::new(encoder, &[64, 64], 4, 4);
    let mut g = rng::seeded(1);
    let td = TdBatchLoss {
        net: &net,
        features: data.iter().map(|(o, goal)| encoder.encode(o, goal)).collect(),
        actions: data.iter().map(|_| g.gen_range(0..4)).collect(),
        targets: data.iter().map(|_| g.gen_range(-1.0..2.0)).collect(),
        weights: data.iter().map(|_| g.gen_range(0.1..1.0)).collect(),
    };
    let coords: Vec<usize> = (0..3000).map(|_| g.gen_range(0..net.params.len())).collect();
    let q_err = finite_diff_check_subset(&net.params, &td, 1e-5, coords);

    let model: GeneratorModel<f64> = GeneratorModel::new(cfg.observation_len(), cfg.cardinalities, &[16], 5);
    let pairs: Vec<Pair> = data
        .iter()
        .map(|(o, goal)| Pair {
            observation: o.clone(),
            goal: *goal,
        })
        .collect();
    let ce = GeneratorLoss {
        model: &model,
        batch: pairs.iter().collect(),
    };
    let g_err = finite_diff_check(model.params(), &ce, 1e-5);
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "gradient correctness",
        q_err < 1e-4 && g_err < 1e-4 && secs < 30.0,
        format!("max relative error Q {q_err:.2e}, generator {g_err:.2e}, {secs:.1}s"),
    );
}

fn dueling_double_q(r: &mut Report) {
    let adv = [0.5f64, -1.25, 2.0, 0.75];
    let shifted: Vec<f64> = adv.iter().map(|a| a + 4.0).collect();
    let invariant = dueling_combine(3.0, &adv) == dueling_combine(3.0, &shifted);
    let target = double_q_value(0.0, false, 1.0, &[1.0, 2.0], &[5.0, 3.0]);
    r.check(
        "dueling and double-Q",
        invariant && target == 3.0,
        format!("shift invariant {invariant}, two-action target {target} (expected 3)"),
    );
}

fn prioritized_replay(r: &mut Report) {
    let mut buf = PrioritizedBuffer::new(2, 1.0, 0.0);
    buf.add(0u8);
    buf.add(1u8);
    buf.update_priorities(&[0, 1], &[1.0, 3.0]);
    let mut g = rng::seeded(3);
    let n = 100_000;
    let mut first = 0usize;
    let mut unit_weights = true;
    for _ in 0..n {
        let s = buf.sample(1, 0.0, &mut g).unwrap();
        first += usize::from(s.indices[0] == 0);
        unit_weights &= s.weights.iter().all(|&w| w == 1.0);
    }
    let f0 = first as f64 / n as f64;

    let mut buf = PrioritizedBuffer::new(257, 0.6, 1e-3);
    let mut worst = 0.0f64;
    for op in 0..10_000u32 {
        if g.gen_bool(0.5) || buf.len() < 8 {
            buf.add(op);
        } else {
            let s = buf.sample(8, 0.4, &mut g).unwrap();
            let errs: Vec<f64> = s.indices.iter().map(|_| g.gen_range(0.0..5.0)).collect();
            buf.update_priorities(&s.indices, &errs);
        }
        let tree = buf.sum_tree();
        worst = worst.max((tree.total() - tree.leaf_sum()).abs());
    }
    r.check(
        "prioritized replay",
        (f0 - 0.25).abs() <= 0.01 && unit_weights && worst <= 1e-6,
        format!("frequencies {f0:.4}/{:.4}, beta=0 weights all 1: {unit_weights}, root drift {worst:.1e}", 1.0 - f0),
    );
}

fn noise_model(r: &mut Report) {
    let cards = Cardinalities::PAPER;
    let picked = ObjectSpec {
        attrs: Attributes::new(2, 1, 4, 0),
        pos: Pos::new(1, 1),
    };
    let mut g = rng::seeded(11);
    let n = 100_000;
    let correct = (0..n)
        .filter(|_| noisy_describe(&picked, 0.2, &cards, &mut g) == oracle_describe(&picked))
        .count();
    let rate = correct as f64 / n as f64;
    r.check(
        "noise model",
        (rate - 0.8f64.powi(4)).abs() <= 0.01,
        format!("fully correct rate {rate:.4} (0.8^4 = {:.4})", 0.8f64.powi(4)),
    );
}

fn memorization(r: &mut Report) {
    let start = Instant::now();
    let cfg = EnvConfig::paper();
    let env = GridWorld::new(cfg).unwrap();
    let mut ds = PairDataset::new(0.0);
    for (i, attrs) in cfg.cardinalities.universe().step_by(9).take(32).enumerate() {
        let traj = run_episode(&env, env.reset(500 + i as u64, Goal::new(attrs)).unwrap(), &mut ScriptedBot).unwrap();
        ds.record_pair(traj.terminal_observation().unwrap().clone(), oracle_describe(&traj.picked.unwrap()));
    }
    let mut generator = InstructionGenerator::new(cfg.observation_len(), cfg.cardinalities, &GeneratorConfig::default(), 1);
    let mut g = rng::seeded(2);
    let mut steps = 0;
    let mut accuracy = 0.0;
    while steps < 5000 && accuracy < 1.0 {
        generator.train(&ds, 100, 32, &mut g).unwrap();
        steps += 100;
        accuracy = validation_accuracy(&generator.model, &ds.train).unwrap().full;
    }
    let secs = start.elapsed().as_secs_f64();
    r.check(
        "generator memorization",
        ds.train.len() == 32 && accuracy == 1.0 && secs < 60.0,
        format!("train accuracy {accuracy:.3} after {steps} steps, {secs:.1}s"),
    );
}

fn study(r: &mut Report) {
    let start = Instant::now();
    let points = summarize(&generator_study(&StudyConfig::desk()).unwrap());
    let secs = start.elapsed().as_secs_f64();
    let monotone = points.windows(2).all(|w| {
        w[1].seen_full >= w[0].seen_full && w[1].unseen_full >= w[0].unseen_full
    });
    let last = points.last().unwrap();
    let curve: Vec<String> = points
        .iter()
        .map(|p| format!("{}: {:.3}/{:.3}", p.size, p.seen_full, p.unseen_full))
        .collect();
    r.check(
        "generator study",
        monotone && last.size == 1000 && last.unseen_full >= 5.0 / 36.0 && secs < 600.0,
        format!("seen/unseen accuracy {}, {secs:.0}s", curve.join(", ")),
    );
}

struct Runs {
    logs: Vec<MetricsLog>,
    summaries: Vec<RunSummary>,
}

impl Runs {
    fn mean(&self) -> f64 {
        let v: Vec<f64> = self.summaries.iter().map(|s| s.final_train_success).collect();
        mean_std(&v).0
    }

    fn describe(&self) -> String {
        let v: Vec<String> = self.summaries.iter().map(|s| format!("{:.3}", s.final_train_success)).collect();
        format!("{:.3} [{}]", self.mean(), v.join(" "))
    }
}

const SEEDS: [u64; 3] = [0, 1, 2];

fn desk_runs(strategy: RelabelStrategy) -> Runs {
    let mut logs = Vec::new();
    let mut summaries = Vec::new();
    for seed in SEEDS {
        let start = Instant::now();
        let mut t = Trainer::new(TrainConfig {
            seed,
            ..TrainConfig::desk(strategy)
        })
        .unwrap();
        let s = t.run().unwrap();
        eprintln!(
            "  {} seed {seed}: final train success {:.3} ({:.0}s)",
            strategy.label(),
            s.final_train_success,
            start.elapsed().as_secs_f64()
        );
        summaries.push(s);
        logs.push(t.into_log());
    }
    Runs { logs, summaries }
}

fn end_to_end(r: &mut Report) {
    let start = Instant::now();
    let dqn = desk_runs(RelabelStrategy::None);
    let her = desk_runs(RelabelStrategy::Oracle);
    let higher = desk_runs(RelabelStrategy::Learned);
    let (d, h, l) = (dqn.mean(), her.mean(), higher.mean());
    r.check(
        "end-to-end ordering",
        h >= l && l > d && l >= 0.8 * h && l - d >= 0.2,
        format!(
            "HER {}, HIGhER {}, DQN {}, {:.0}s",
            her.describe(),
            higher.describe(),
            dqn.describe(),
            start.elapsed().as_secs_f64()
        ),
    );

    let mut sound = true;
    let mut relabeled = 0;
    for s in &higher.summaries {
        sound &= s.relabel_reward_one == s.relabel_goal_correct;
        relabeled += s.relabeled_trajectories;
    }
    for log in &higher.logs {
        sound &= log.diagnostics.iter().all(|d| d.relabel_reward_one == d.relabel_goal_correct);
    }
    r.check(
        "relabel soundness",
        sound && relabeled > 0,
        format!("{relabeled} learned relabels, reward-one count equals correct-goal count: {sound}"),
    );

    let mut disciplined = true;
    for (log, s) in higher.logs.iter().zip(&higher.summaries) {
        disciplined &= log.diagnostics.iter().all(|d| d.gate_open || d.relabeled_transitions == 0);
        disciplined &= match (s.first_gate_open_step, s.first_relabel_step) {
            (Some(gate), Some(first)) => first >= gate,
            (None, None) => true,
            _ => false,
        };
    }
    let gates: Vec<String> = higher
        .summaries
        .iter()
        .map(|s| format!("{:?}/{:?}", s.first_gate_open_step, s.first_relabel_step))
        .collect();
    r.check(
        "gate discipline",
        disciplined,
        format!("no relabels before the gate; gate/first relabel steps {}", gates.join(" ")),
    );

    let p0 = desk_runs(RelabelStrategy::Noisy { p: 0.0 });
    let p5 = desk_runs(RelabelStrategy::Noisy { p: 0.5 });
    let p8 = desk_runs(RelabelStrategy::Noisy { p: 0.8 });
    let (a, b, c) = (p0.mean(), p5.mean(), p8.mean());
    r.check(
        "noisy relabeling robustness",
        b >= 0.7 * a && c > d,
        format!("p=0 {}, p=0.5 {}, p=0.8 {}, DQN {d:.3}", p0.describe(), p5.describe(), p8.describe()),
    );
}

fn cli_reproducibility(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "total_steps = 3000\nwarmup_steps = 100\nlog_every = 500\neval_episodes = 5\nfinal_eval_episodes = 10\n",
    )
    .unwrap();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let ok = Command::new(env!("CARGO_BIN_EXE_higher"))
            .args(["train", "--strategy", "learned", "--seed", "5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .stdout(Stdio::null())
            .status()
            .is_ok_and(|s| s.success());
        csvs.push(ok.then(|| std::fs::read(out.join("train/learned/seed-5/metrics.csv")).ok()).flatten());
    }
    let same = csvs[0].is_some() && csvs[0] == csvs[1];
    r.check(
        "reproducibility",
        same,
        format!("metrics CSVs of two identical invocations byte-identical: {same}"),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failures: 0 };
    predicate_exactness(&mut r);
    gradient_correctness(&mut r);
    dueling_double_q(&mut r);
    prioritized_replay(&mut r);
    noise_model(&mut r);
    memorization(&mut r);
    study(&mut r);
    cli_reproducibility(&mut r);
    end_to_end(&mut r);
    if r.failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", r.failures);
        ExitCode::FAILURE
    }
}
