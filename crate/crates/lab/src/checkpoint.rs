//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "HGCK" | version u32 | config hash u64 | config length u32 | config TOML
//! array count u32 | per array: name length u32, name, rank u32, dims u64 × rank,
//!                              values f32 × product(dims)
//! ```
//!
//! The hash is [`crate::config::config_hash`] of the embedded TOML and is
//! checked on load.

use std::path::Path;

use higher_core::higher::Trainer;
use higher_core::nn::ParameterSet;

use crate::config::config_hash;
use crate::error::{io, LabError, Result};

pub const MAGIC: [u8; 4] = *b"HGCK";
pub const VERSION: u32 = 1;

/// Prefix of the Q-network arrays.
pub const Q_PREFIX: &str = "q/";
/// Prefix of the instruction generator arrays.
pub const GENERATOR_PREFIX: &str = "generator/";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_toml: String,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    /// Online Q-network and, when present, the generator.
    pub fn from_trainer(trainer: &Trainer, config_toml: String) -> Self {
        let mut arrays = Vec::new();
        push_params(&mut arrays, Q_PREFIX, &trainer.agent.online.params);
        if let Some(g) = &trainer.generator {
            push_params(&mut arrays, GENERATOR_PREFIX, &g.model.net.params);
        }
        Self { config_toml, arrays }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&config_hash(&self.config_toml).to_le_bytes());
        put_str(&mut out, &self.config_toml);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            put_str(&mut out, &a.name);
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &a.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(LabError::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(LabError::Checkpoint(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let hash = r.u64()?;
        let config_toml = r.string()?;
        if config_hash(&config_toml) != hash {
            return Err(LabError::Checkpoint("config hash mismatch".into()));
        }
        let count = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|n| n.checked_mul(4).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| LabError::Checkpoint(format!("array {name} is truncated")))?;
            let values = r
                .take(len * 4)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect();
            arrays.push(NamedArray { name, shape, values });
        }
        if r.remaining() != 0 {
            return Err(LabError::Checkpoint("trailing bytes after the last array".into()));
        }
        Ok(Self { config_toml, arrays })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(io(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(io(path))?)
    }

    /// Copies every array named `prefix + name` into the matching parameter.
    pub fn load_into(&self, prefix: &str, params: &mut ParameterSet<f32>) -> Result<()> {
        for p in params.params_mut() {
            let name = format!("{prefix}{}", p.name);
            let a = self
                .arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| LabError::Checkpoint(format!("missing array {name}")))?;
            if a.shape != p.shape {
                return Err(LabError::Checkpoint(format!(
                    "array {name} has shape {:?}, expected {:?}",
                    a.shape, p.shape
                )));
            }
            p.values.copy_from_slice(&a.values);
        }
        Ok(())
    }
}

fn push_params(out: &mut Vec<NamedArray>, prefix: &str, params: &ParameterSet<f32>) {
    out.extend(params.params().iter().map(|p| NamedArray {
        name: format!("{prefix}{}", p.name),
        shape: p.shape.clone(),
        values: p.values.clone(),
    }));
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(LabError::Checkpoint("unexpected end of checkpoint".into()));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| LabError::Checkpoint("string is not UTF-8".into()))
    }
}
