//! The `higher` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use higher_core::agent::{DqnAgent, FeatureEncoder};
use higher_core::higher::{evaluate_agent, TrainConfig};
use higher_core::language::split_goals;
use higher_core::metrics::buffer_report;
use higher_core::{GridWorld, Vocabulary};

use crate::checkpoint::{Checkpoint, Q_PREFIX};
use crate::config::{self, parse_strategy, Scale};
use crate::error::{LabError, Result};
use crate::records::write_json;
use crate::runs::{self, read_metrics, run_dir, run_single, METRICS_FILE};
use crate::study::{generator_study, summarize, StudyConfig};

#[derive(Debug, Parser)]
#[command(name = "higher", version, about = "Hindsight instruction-generation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Paper,
    Desk,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Paper => Scale::Paper,
            ScaleArg::Desk => Scale::Desk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GoalSet {
    Train,
    Test,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one configuration.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
        /// none, oracle, learned, shaped or noisy-<p>; overrides the file.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the environment step budget.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every variant of a named preset over several seeds.
    Preset {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Offline accuracy of the generator against dataset size.
    Study {
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate a checkpoint's Q-network.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "train")]
        goals: GoalSet,
        #[arg(long, default_value_t = 500)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Buffer composition over time, from metrics CSVs or run directories.
    Report { paths: Vec<PathBuf> },
}

/// Parses and runs; prints `error: <kind>: <message>` on failure.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), single_line(&e.to_string()));
            ExitCode::from(e.exit_code())
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn base_config(
    path: Option<&Path>,
    scale: Option<ScaleArg>,
    strategy: Option<&str>,
    seed: Option<u64>,
    steps: Option<u64>,
) -> Result<TrainConfig> {
    let scale = scale.map(Scale::from);
    let mut c = match path {
        Some(p) => config::load(p, scale)?,
        None => config::resolve(scale.unwrap_or_default(), None)?,
    };
    if let Some(s) = strategy {
        (c.strategy, c.reward_mode) = parse_strategy(s)?;
    }
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(n) = steps {
        c.total_steps = n;
    }
    c.validate()?;
    Ok(c)
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    let print = |out: &mut dyn Write, line: String| {
        writeln!(out, "{line}").map_err(crate::error::io(Path::new("<stdout>")))
    };
    match command {
        Command::Train {
            config,
            scale,
            strategy,
            seed,
            steps,
            out: dir,
        } => {
            let c = base_config(config.as_deref(), scale, strategy.as_deref(), seed, steps)?;
            let variant = match c.reward_mode {
                higher_core::RewardMode::Shaped => "shaped".to_string(),
                _ => c.strategy.label(),
            };
            let run = run_dir(&dir, "train", &variant, c.seed);
            let s = run_single(&c, &run)?;
            print(out, format!("run: {}", run.display()))?;
            print(
                out,
                format!(
                    "final success: train {:.3} test {:.3}",
                    s.final_train_success, s.final_test_success
                ),
            )
        }
        Command::Preset {
            name,
            config,
            scale,
            seeds,
            steps,
            out: dir,
        } => {
            let resolved_scale = scale.map(Scale::from).unwrap_or_default();
            let base = base_config(config.as_deref(), scale, None, None, steps)?;
            let p = runs::preset(&name, &base, seeds)?;
            let summary = runs::run_preset(&p, resolved_scale, &dir)?;
            for v in &summary.variants {
                print(
                    out,
                    format!(
                        "{}: train {:.3} ± {:.3}, test {:.3} ± {:.3}",
                        v.variant, v.train_mean, v.train_std, v.test_mean, v.test_std
                    ),
                )?;
            }
            Ok(())
        }
        Command::Study { scale, seeds, out: dir } => {
            let mut cfg = match Scale::from(scale) {
                Scale::Paper => StudyConfig::paper(),
                Scale::Desk => StudyConfig::desk(),
            };
            if seeds == 0 {
                return Err(LabError::Usage("at least one seed is needed".into()));
            }
            cfg.seeds = (0..seeds).collect();
            let rows = generator_study(&cfg)?;
            let points = summarize(&rows);
            let study_dir = dir.join("study");
            std::fs::create_dir_all(&study_dir).map_err(crate::error::io(&study_dir))?;
            write_json(&study_dir.join("rows.json"), &rows)?;
            write_json(&study_dir.join("summary.json"), &points)?;
            print(out, "size,seen_accuracy,unseen_accuracy".into())?;
            for p in points {
                print(out, format!("{},{:.4},{:.4}", p.size, p.seen_full, p.unseen_full))?;
            }
            Ok(())
        }
        Command::Eval {
            checkpoint,
            goals,
            episodes,
            seed,
        } => {
            let ck = Checkpoint::read(&checkpoint)?;
            let c = config::from_toml(&ck.config_toml)?;
            let encoder = FeatureEncoder {
                observation_len: c.env.observation_len(),
                cards: c.env.cardinalities,
            };
            let mut agent = DqnAgent::new(c.dqn.clone(), encoder, 0);
            ck.load_into(Q_PREFIX, &mut agent.online.params)?;
            let env = GridWorld::with_reward(c.env, c.reward_mode)?;
            let vocab = Vocabulary::new(c.env.cardinalities)?;
            let split = split_goals(&vocab.universe(), c.test_fraction, c.split_seed)?;
            let set = match goals {
                GoalSet::Train => &split.train,
                GoalSet::Test => &split.test,
            };
            let rate = evaluate_agent(&agent, &env, set, episodes, c.eval_epsilon, seed)?;
            print(out, format!("success: {rate:.4}"))
        }
        Command::Report { paths } => {
            if paths.is_empty() {
                return Err(LabError::Usage("report needs at least one path".into()));
            }
            for p in paths {
                let csv = if p.is_dir() { p.join(METRICS_FILE) } else { p.clone() };
                let rows = read_metrics(&csv)?;
                print(out, format!("# {}", csv.display()))?;
                print(out, "env_steps,positive,negative,relabeled,time_out".into())?;
                for r in buffer_report(&rows) {
                    print(
                        out,
                        format!(
                            "{},{:.4},{:.4},{:.4},{:.4}",
                            r.env_steps, r.positive, r.negative, r.relabeled, r.time_out
                        ),
                    )?;
                }
            }
            Ok(())
        }
    }
}
