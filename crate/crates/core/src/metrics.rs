//! Per-interval metrics rows, per-run diagnostics and the final run summary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::gridworld::NUM_ATTRIBUTES;

/// Column names of the metrics CSV, in order.
pub const CSV_COLUMNS: [&str; 10] = [
    "env_steps",
    "train_success",
    "test_success",
    "gen_accuracy",
    "frac_positive",
    "frac_negative",
    "frac_relabeled",
    "frac_timeout",
    "epsilon",
    "td_loss",
];

/// Bumped whenever [`CSV_COLUMNS`] changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// One logging interval. `gen_accuracy` is NaN without a generator or
/// before its first validation; `td_loss` is NaN before the first update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsRow {
    pub env_steps: u64,
    pub train_success: f64,
    pub test_success: f64,
    pub gen_accuracy: f64,
    pub frac_positive: f64,
    pub frac_negative: f64,
    pub frac_relabeled: f64,
    pub frac_timeout: f64,
    pub epsilon: f64,
    pub td_loss: f64,
}

impl MetricsRow {
    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn fractions(&self) -> [f64; 4] {
        [
            self.frac_positive,
            self.frac_negative,
            self.frac_relabeled,
            self.frac_timeout,
        ]
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.env_steps,
            num(self.train_success),
            num(self.test_success),
            num(self.gen_accuracy),
            num(self.frac_positive),
            num(self.frac_negative),
            num(self.frac_relabeled),
            num(self.frac_timeout),
            num(self.epsilon),
            num(self.td_loss),
        )
    }

    /// Inverse of [`MetricsRow::to_csv`].
    pub fn from_csv(line: &str) -> Option<Self> {
        let mut it = line.trim_end().split(',');
        let env_steps = it.next()?.parse().ok()?;
        let mut f = [0.0f64; 9];
        for v in f.iter_mut() {
            *v = parse_num(it.next()?)?;
        }
        if it.next().is_some() {
            return None;
        }
        Some(Self {
            env_steps,
            train_success: f[0],
            test_success: f[1],
            gen_accuracy: f[2],
            frac_positive: f[3],
            frac_negative: f[4],
            frac_relabeled: f[5],
            frac_timeout: f[6],
            epsilon: f[7],
            td_loss: f[8],
        })
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::from("NaN")
    } else {
        format!("{x:.6}")
    }
}

fn parse_num(s: &str) -> Option<f64> {
    if s == "NaN" {
        Some(f64::NAN)
    } else {
        s.parse().ok()
    }
}

/// Cumulative training counters at a logging step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsRow {
    pub env_steps: u64,
    pub episodes: u64,
    pub positives: u64,
    pub wrong_picks: u64,
    pub time_outs: u64,
    pub dataset_train: usize,
    pub dataset_val: usize,
    pub gate_open: bool,
    pub relabeled_trajectories: u64,
    pub relabeled_transitions: u64,
    /// Relabeled trajectories whose terminal reward became 1.
    pub relabel_reward_one: u64,
    /// Relabeled trajectories whose substitute goal names the picked object.
    pub relabel_goal_correct: u64,
    pub per_attribute_accuracy: Option<[f64; NUM_ATTRIBUTES]>,
    pub buffer_size: usize,
    pub td_updates: u64,
}

/// Everything a run logs: the metrics rows plus diagnostics at the same steps.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsLog {
    pub preset: String,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

impl MetricsLog {
    pub fn new(preset: impl Into<String>, seed: u64) -> Self {
        Self {
            preset: preset.into(),
            seed,
            rows: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = MetricsRow::csv_header();
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    /// Parses a CSV written by [`MetricsLog::to_csv`]; `None` on a header
    /// mismatch or a malformed row.
    pub fn rows_from_csv(text: &str) -> Option<Vec<MetricsRow>> {
        let mut lines = text.lines();
        if lines.next()?.trim_end() != MetricsRow::csv_header() {
            return None;
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(MetricsRow::from_csv)
            .collect()
    }

    /// Steps strictly increase and fractions are in `[0, 1]` summing to 1
    /// (or all zero for an empty buffer).
    pub fn is_well_formed(&self) -> bool {
        let increasing = self.rows.windows(2).all(|w| w[0].env_steps < w[1].env_steps);
        let fractions = self.rows.iter().all(|r| {
            let f = r.fractions();
            let sum: f64 = f.iter().sum();
            f.iter().all(|x| (0.0..=1.0).contains(x)) && ((sum - 1.0).abs() < 1e-6 || sum == 0.0)
        });
        increasing && fractions
    }
}

/// Final figures of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSummary {
    pub strategy: String,
    pub seed: u64,
    pub env_steps: u64,
    pub episodes: u64,
    pub positives: u64,
    pub td_updates: u64,
    /// Greedy-ish (evaluation ε) success on training goals after training.
    pub final_train_success: f64,
    /// Same on the held-out goals.
    pub final_test_success: f64,
    pub final_gen_accuracy: Option<f64>,
    pub first_gate_open_step: Option<u64>,
    pub first_relabel_step: Option<u64>,
    pub relabeled_trajectories: u64,
    pub relabeled_transitions: u64,
    pub relabel_reward_one: u64,
    pub relabel_goal_correct: u64,
}

/// Buffer shares with time-outs taken out of the denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompositionPoint {
    pub env_steps: u64,
    pub positive: f64,
    pub negative: f64,
    pub relabeled: f64,
    /// Share of time-outs in the whole buffer.
    pub time_out: f64,
}

pub fn buffer_report(rows: &[MetricsRow]) -> Vec<CompositionPoint> {
    rows.iter()
        .map(|r| {
            let rest = r.frac_positive + r.frac_negative + r.frac_relabeled;
            let share = |x: f64| if rest > 0.0 { x / rest } else { 0.0 };
            CompositionPoint {
                env_steps: r.env_steps,
                positive: share(r.frac_positive),
                negative: share(r.frac_negative),
                relabeled: share(r.frac_relabeled),
                time_out: r.frac_timeout,
            }
        })
        .collect()
}

/// Mean and population standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, num_traits::Float::sqrt(var))
}
