//! TOML run configuration. A file only lists the keys it changes; they are
//! merged over the defaults of the chosen scale and the merged result is what
//! gets stored with the run.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use higher_core::higher::{RelabelStrategy, TrainConfig};
use higher_core::RewardMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{io, LabError, Result};

/// Which set of defaults a configuration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Full-size room and the long budget.
    Paper,
    /// Small room, sized for a single core.
    #[default]
    Desk,
}

impl Scale {
    pub fn defaults(self, strategy: RelabelStrategy) -> TrainConfig {
        match self {
            Scale::Paper => TrainConfig::paper(strategy),
            Scale::Desk => TrainConfig::desk(strategy),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(LabError::Usage(format!(
                "unknown scale {other:?} (expected paper or desk)"
            ))),
        }
    }
}

/// Strategy names accepted on the command line. `shaped` means no relabeling
/// with the shaped pick reward.
pub fn parse_strategy(s: &str) -> Result<(RelabelStrategy, RewardMode)> {
    let plain = |r| Ok((r, RewardMode::Sparse));
    match s {
        "none" | "dqn" => plain(RelabelStrategy::None),
        "oracle" | "her" => plain(RelabelStrategy::Oracle),
        "learned" | "higher" => plain(RelabelStrategy::Learned),
        "shaped" => Ok((RelabelStrategy::None, RewardMode::Shaped)),
        other => match other.strip_prefix("noisy-").map(str::parse::<f64>) {
            Some(Ok(p)) => plain(RelabelStrategy::Noisy { p }),
            _ => Err(LabError::Usage(format!(
                "unknown strategy {other:?} (expected none, oracle, learned, shaped or noisy-<p>)"
            ))),
        },
    }
}

/// Merges `overlay` into `base`. Keys missing from `base` are rejected, except
/// inside tagged tables, which are replaced whole when the tag changes.
pub fn merge(base: &mut Table, overlay: &Table, prefix: &str) -> Result<()> {
    for (key, value) in overlay {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        let Some(slot) = base.get_mut(key) else {
            return Err(higher_core::Error::Config(format!("unknown key {path}")).into());
        };
        match (slot, value) {
            (Value::Table(b), Value::Table(o)) if !replaces_variant(b, o) => merge(b, o, &path)?,
            (slot, value) => *slot = value.clone(),
        }
    }
    Ok(())
}

fn replaces_variant(base: &Table, overlay: &Table) -> bool {
    let tag_changed = ["kind", "mode"]
        .iter()
        .any(|t| overlay.contains_key(*t) && overlay.get(*t) != base.get(*t));
    let single_key_enum = base.len() == 1 && overlay.len() == 1 && base.keys().ne(overlay.keys());
    tag_changed || single_key_enum
}

/// Defaults of `scale` with the overlay text applied, validated.
pub fn resolve(scale: Scale, overlay: Option<&str>) -> Result<TrainConfig> {
    let base = scale.defaults(RelabelStrategy::None);
    let Some(text) = overlay else {
        base.validate()?;
        return Ok(base);
    };
    let overlay: Table = text
        .parse()
        .map_err(|e: toml::de::Error| higher_core::Error::Config(e.message().to_string()))?;
    let mut merged = to_table(&base)?;
    merge(&mut merged, &overlay, "")?;
    let config: TrainConfig = Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| higher_core::Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads a TOML file. A top-level `scale` key picks the defaults unless
/// `scale` is given.
pub fn load(path: &Path, scale: Option<Scale>) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    let mut table: Table = text.parse().map_err(|e| LabError::format(path, e))?;
    let from_file = match table.remove("scale") {
        Some(Value::String(s)) => Some(s.parse()?),
        Some(_) => return Err(LabError::format(path, "scale must be a string")),
        None => None,
    };
    let scale = scale.or(from_file).unwrap_or_default();
    resolve(scale, Some(&toml::to_string(&table).map_err(|e| LabError::format(path, e))?))
}

fn to_table(config: &TrainConfig) -> Result<Table> {
    match Value::try_from(config) {
        Ok(Value::Table(t)) => Ok(t),
        Ok(_) => unreachable!("a struct serializes to a table"),
        Err(e) => Err(higher_core::Error::Config(e.to_string()).into()),
    }
}

/// Complete TOML rendering of a resolved configuration.
pub fn to_toml(config: &TrainConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| higher_core::Error::Config(e.to_string()).into())
}

pub fn from_toml(text: &str) -> Result<TrainConfig> {
    let config: TrainConfig = toml::from_str(text)
        .map_err(|e| higher_core::Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

/// First eight bytes of the SHA-256 of the text, as a number.
pub fn config_hash(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips() {
        for scale in [Scale::Paper, Scale::Desk] {
            let mut c = scale.defaults(RelabelStrategy::Noisy { p: 0.2 });
            c.dqn.adam.max_grad_norm = None;
            let text = to_toml(&c).unwrap();
            assert_eq!(from_toml(&text).unwrap(), c);
            assert_eq!(config_hash(&text), config_hash(&to_toml(&c).unwrap()));
        }
    }

    #[test]
    fn overlay_changes_only_listed_keys() {
        let c = resolve(Scale::Desk, Some("total_steps = 5000\n[dqn]\ngamma = 0.9\n")).unwrap();
        let mut expected = Scale::Desk.defaults(RelabelStrategy::None);
        expected.total_steps = 5000;
        expected.dqn.gamma = 0.9;
        assert_eq!(c, expected);
    }

    #[test]
    fn overlay_switches_tagged_variants() {
        let text = "[strategy]\nkind = \"noisy\"\np = 0.5\n[generator.gate]\nmode = \"threshold\"\nmin_accuracy = 0.9\nmin_val_size = 10\n";
        let c = resolve(Scale::Desk, Some(text)).unwrap();
        assert_eq!(c.strategy, RelabelStrategy::Noisy { p: 0.5 });
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let e = resolve(Scale::Desk, Some("totl_steps = 1\n")).unwrap_err();
        assert_eq!(e.kind(), "config");
        assert!(e.to_string().contains("totl_steps"));
        let e = resolve(Scale::Desk, Some("[strategy]\nkind = \"noisy\"\np = 1.5\n")).unwrap_err();
        assert_eq!(e.kind(), "config");
        let e = resolve(Scale::Desk, Some("reward_mode = \"shaped\"\n[strategy]\nkind = \"oracle\"\n"))
            .unwrap_err();
        assert_eq!(e.kind(), "config");
    }

    #[test]
    fn file_may_pick_the_scale() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "scale = \"paper\"\ntotal_steps = 200000\n[strategy]\nkind = \"noisy\"\np = 0.5\n[dqn]\nhidden = [128, 128]\n[generator.gate]\nmode = \"positive_count\"\nmin_positives = 1000\n",
        )
        .unwrap();
        let c = load(&path, None).unwrap();
        assert_eq!(c.env, higher_core::EnvConfig::paper());
        assert_eq!(c.total_steps, 200_000);
        assert_eq!(load(&path, Some(Scale::Desk)).unwrap().env, higher_core::EnvConfig::desk());
    }

    #[test]
    fn strategy_names() {
        assert_eq!(parse_strategy("noisy-0.8").unwrap().0, RelabelStrategy::Noisy { p: 0.8 });
        assert_eq!(parse_strategy("shaped").unwrap().1, RewardMode::Shaped);
        assert_eq!(parse_strategy("bogus").unwrap_err().kind(), "usage");
    }
}
