//! Run directories and experiment presets.
//!
//! A single run writes into `<out>/<preset>/<variant>/seed-<n>/`:
//!
//! | file | contents |
//! |---|---|
//! | `config.toml` | resolved configuration |
//! | `seed` | the seed, as text |
//! | `vocabulary.json` | word lists and template |
//! | `split.json` | train/test goal split |
//! | `metrics.csv` | one row per logging step |
//! | `diagnostics.jsonl` | counters and generator accuracy per logging step |
//! | `checkpoint.bin` | final Q-network and generator weights |
//! | `summary.json` | final figures; written last and marks the run complete |
//!
//! A directory without `summary.json` is a partial run and is cleared and
//! rerun. A failed run leaves `failure.json` behind instead.

use std::path::{Path, PathBuf};

use higher_core::generator::GateConfig;
use higher_core::higher::{RelabelStrategy, TrainConfig, Trainer};
use higher_core::metrics::{mean_std, MetricsLog, MetricsRow, RunSummary, CSV_COLUMNS};
use higher_core::{RewardMode, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::{config_hash, to_toml, Scale};
use crate::error::{io, LabError, Result};
use crate::records::{read_json, write_json, write_jsonl, VocabularyManifest};

pub const SUMMARY_FILE: &str = "summary.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const FAILURE_FILE: &str = "failure.json";

/// What is left behind when training stops on an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureDump {
    pub kind: String,
    pub message: String,
    pub env_steps: u64,
    pub last_row: Option<MetricsRow>,
}

pub fn run_dir(out: &Path, preset: &str, variant: &str, seed: u64) -> PathBuf {
    out.join(preset).join(variant).join(format!("seed-{seed}"))
}

/// Trains one configuration into `dir`. A completed run with the same
/// configuration is not repeated; its summary is returned as is.
pub fn run_single(config: &TrainConfig, dir: &Path) -> Result<RunSummary> {
    let config_toml = to_toml(config)?;
    let summary_path = dir.join(SUMMARY_FILE);
    if summary_path.exists() {
        let stored = std::fs::read_to_string(dir.join(CONFIG_FILE)).ok();
        if stored.is_some_and(|s| config_hash(&s) == config_hash(&config_toml)) {
            return read_json(&summary_path);
        }
    }
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(io(&p))
    };
    write(CONFIG_FILE, &config_toml)?;
    write("seed", &format!("{}\n", config.seed))?;

    let mut trainer = Trainer::new(config.clone())?;
    let vocab = Vocabulary::new(config.env.cardinalities)?;
    write_json(&dir.join("vocabulary.json"), &VocabularyManifest::new(&vocab))?;
    write_json(&dir.join("split.json"), trainer.split())?;

    let summary = match trainer.run() {
        Ok(s) => s,
        Err(e) => {
            let dump = FailureDump {
                kind: e.kind().to_string(),
                message: e.to_string(),
                env_steps: trainer.env_steps(),
                last_row: trainer.log().rows.last().copied(),
            };
            write(METRICS_FILE, &trainer.log().to_csv())?;
            write_json(&dir.join(FAILURE_FILE), &dump)?;
            return Err(e.into());
        }
    };
    write(METRICS_FILE, &trainer.log().to_csv())?;
    write_jsonl(&dir.join("diagnostics.jsonl"), &trainer.log().diagnostics)?;
    Checkpoint::from_trainer(&trainer, config_toml).write(&dir.join(CHECKPOINT_FILE))?;
    write_json(&summary_path, &summary)?;
    Ok(summary)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    MetricsLog::rows_from_csv(&text).ok_or_else(|| LabError::format(path, "malformed metrics CSV"))
}

/// One named configuration of a preset.
#[derive(Debug, Clone)]
pub struct Variant {
    pub name: String,
    pub config: TrainConfig,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
}

pub const PRESET_NAMES: [&str; 3] = ["baseline-comparison", "noisy-her", "delayed-trigger"];

/// Builds a preset over `base` (the scale defaults unless a config file was
/// given) for seeds `0..seeds`.
pub fn preset(name: &str, base: &TrainConfig, seeds: u64) -> Result<Preset> {
    let with = |strategy: RelabelStrategy| TrainConfig {
        strategy,
        reward_mode: RewardMode::Sparse,
        ..base.clone()
    };
    let variant = |name: String, config: TrainConfig| Variant { name, config };
    let (name, variants) = match name {
        "baseline-comparison" => (
            PRESET_NAMES[0],
            vec![
                variant("dqn".into(), with(RelabelStrategy::None)),
                variant("dqn-her".into(), with(RelabelStrategy::Oracle)),
                variant("dqn-higher".into(), with(RelabelStrategy::Learned)),
                variant(
                    "dqn-reward".into(),
                    TrainConfig {
                        reward_mode: RewardMode::Shaped,
                        ..with(RelabelStrategy::None)
                    },
                ),
            ],
        ),
        "noisy-her" => (
            PRESET_NAMES[1],
            [0.0, 0.2, 0.5, 0.8]
                .into_iter()
                .map(|p| variant(format!("noise-{p}"), with(RelabelStrategy::Noisy { p })))
                .collect(),
        ),
        "delayed-trigger" => (
            PRESET_NAMES[2],
            [0u64, 1000, 2000]
                .into_iter()
                .map(|min_positives| {
                    let mut c = with(RelabelStrategy::Learned);
                    c.generator.gate = GateConfig::PositiveCount { min_positives };
                    variant(format!("trigger-{min_positives}"), c)
                })
                .collect(),
        ),
        other => {
            return Err(LabError::UnknownPreset {
                name: other.to_string(),
                known: PRESET_NAMES.join(", "),
            })
        }
    };
    if seeds == 0 {
        return Err(LabError::Usage("at least one seed is needed".into()));
    }
    Ok(Preset {
        name,
        variants,
        seeds: (0..seeds).collect(),
    })
}

/// Mean and standard deviation of each metric across seeds at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub env_steps: u64,
    pub mean: [f64; 9],
    pub std: [f64; 9],
}

fn metric_values(r: &MetricsRow) -> [f64; 9] {
    [
        r.train_success,
        r.test_success,
        r.gen_accuracy,
        r.frac_positive,
        r.frac_negative,
        r.frac_relabeled,
        r.frac_timeout,
        r.epsilon,
        r.td_loss,
    ]
}

/// Aligns runs by `env_steps`; steps missing from any run are dropped.
/// NaN entries are left out of their column's statistics.
pub fn aggregate(runs: &[Vec<MetricsRow>]) -> Vec<AggregateRow> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .iter()
        .filter_map(|r0| {
            let rows: Vec<&MetricsRow> = runs
                .iter()
                .map(|run| run.iter().find(|r| r.env_steps == r0.env_steps))
                .collect::<Option<_>>()?;
            let mut mean = [f64::NAN; 9];
            let mut std = [f64::NAN; 9];
            for k in 0..9 {
                let values: Vec<f64> = rows
                    .iter()
                    .map(|r| metric_values(r)[k])
                    .filter(|v| !v.is_nan())
                    .collect();
                (mean[k], std[k]) = mean_std(&values);
            }
            Some(AggregateRow {
                env_steps: r0.env_steps,
                mean,
                std,
            })
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let fmt = |x: f64| if x.is_nan() { "NaN".to_string() } else { format!("{x:.6}") };
    let mut out = String::from("env_steps");
    for c in &CSV_COLUMNS[1..] {
        out.push_str(&format!(",{c}_mean,{c}_std"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&r.env_steps.to_string());
        for k in 0..9 {
            out.push_str(&format!(",{},{}", fmt(r.mean[k]), fmt(r.std[k])));
        }
        out.push('\n');
    }
    out
}

/// Final success of one variant across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub seeds: Vec<u64>,
    pub final_train_success: Vec<f64>,
    pub final_test_success: Vec<f64>,
    pub train_mean: f64,
    pub train_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSummary {
    pub preset: String,
    pub scale: Scale,
    pub variants: Vec<VariantSummary>,
}

impl PresetSummary {
    pub fn variant(&self, name: &str) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.variant == name)
    }
}

/// Runs every variant and seed, then writes `aggregate.csv` per variant and
/// `summary.json` for the preset.
pub fn run_preset(preset: &Preset, scale: Scale, out: &Path) -> Result<PresetSummary> {
    let mut variants = Vec::new();
    for v in &preset.variants {
        let mut summaries = Vec::new();
        let mut curves = Vec::new();
        for &seed in &preset.seeds {
            let config = TrainConfig { seed, ..v.config.clone() };
            let dir = run_dir(out, preset.name, &v.name, seed);
            summaries.push(run_single(&config, &dir)?);
            curves.push(read_metrics(&dir.join(METRICS_FILE))?);
        }
        let variant_dir = out.join(preset.name).join(&v.name);
        let agg = aggregate_csv(&aggregate(&curves));
        let agg_path = variant_dir.join("aggregate.csv");
        std::fs::write(&agg_path, agg).map_err(io(&agg_path))?;
        let train: Vec<f64> = summaries.iter().map(|s| s.final_train_success).collect();
        let test: Vec<f64> = summaries.iter().map(|s| s.final_test_success).collect();
        let (train_mean, train_std) = mean_std(&train);
        let (test_mean, test_std) = mean_std(&test);
        variants.push(VariantSummary {
            variant: v.name.clone(),
            seeds: preset.seeds.clone(),
            final_train_success: train,
            final_test_success: test,
            train_mean,
            train_std,
            test_mean,
            test_std,
        });
    }
    let summary = PresetSummary {
        preset: preset.name.to_string(),
        scale,
        variants,
    };
    write_json(&out.join(preset.name).join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, s: f64) -> MetricsRow {
        MetricsRow {
            env_steps: step,
            train_success: s,
            test_success: s,
            gen_accuracy: f64::NAN,
            frac_positive: 0.0,
            frac_negative: 0.0,
            frac_relabeled: 0.0,
            frac_timeout: 1.0,
            epsilon: 1.0,
            td_loss: f64::NAN,
        }
    }

    #[test]
    fn aggregate_aligns_by_step() {
        let a = vec![row(10, 0.2), row(20, 0.4)];
        let b = vec![row(10, 0.4), row(30, 0.0)];
        let agg = aggregate(&[a, b]);
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].env_steps, 10);
        assert!((agg[0].mean[0] - 0.3).abs() < 1e-12);
        assert!((agg[0].std[0] - 0.1).abs() < 1e-12);
        assert!(agg[0].mean[2].is_nan());
        let csv = aggregate_csv(&agg);
        assert!(csv.starts_with("env_steps,train_success_mean,train_success_std,"));
    }

    #[test]
    fn presets_list_their_variants() {
        let base = TrainConfig::desk(RelabelStrategy::None);
        let names = |p: &Preset| p.variants.iter().map(|v| v.name.clone()).collect::<Vec<_>>();
        let p = preset("baseline-comparison", &base, 3).unwrap();
        assert_eq!(names(&p), ["dqn", "dqn-her", "dqn-higher", "dqn-reward"]);
        assert_eq!(p.seeds, [0, 1, 2]);
        assert!(p.variants.iter().all(|v| v.config.validate().is_ok()));
        let p = preset("noisy-her", &base, 1).unwrap();
        assert_eq!(names(&p), ["noise-0", "noise-0.2", "noise-0.5", "noise-0.8"]);
        let p = preset("delayed-trigger", &base, 1).unwrap();
        assert_eq!(names(&p), ["trigger-0", "trigger-1000", "trigger-2000"]);
        assert_eq!(preset("nope", &base, 1).unwrap_err().kind(), "usage");
    }

    #[test]
    fn completed_runs_are_reused_and_partial_runs_redone() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = TrainConfig::desk(RelabelStrategy::Oracle);
        c.dqn.hidden = vec![8];
        c.total_steps = 300;
        c.warmup_steps = 32;
        c.log_every = 100;
        c.eval_episodes = 2;
        c.final_eval_episodes = 2;
        let run = dir.path().join("r");
        let first = run_single(&c, &run).unwrap();
        for f in ["config.toml", "seed", "vocabulary.json", "split.json", "metrics.csv", "diagnostics.jsonl", "checkpoint.bin", "summary.json"] {
            assert!(run.join(f).exists(), "{f}");
        }
        std::fs::write(run.join("metrics.csv"), "stale").unwrap();
        assert_eq!(run_single(&c, &run).unwrap(), first);
        assert_eq!(std::fs::read_to_string(run.join("metrics.csv")).unwrap(), "stale");

        std::fs::remove_file(run.join(SUMMARY_FILE)).unwrap();
        assert_eq!(run_single(&c, &run).unwrap(), first);
        assert!(read_metrics(&run.join("metrics.csv")).is_ok());
    }
}
