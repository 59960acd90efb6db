//! JSON and JSON Lines records: layouts, trajectories, pair datasets,
//! diagnostics, the vocabulary manifest and goal splits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use higher_core::gridworld::ATTRIBUTE_NAMES;
use higher_core::language::{TEMPLATE_ORDER, TEMPLATE_PREFIX};
use higher_core::{Cardinalities, Vocabulary};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io, LabError, Result};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::format(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| LabError::format(path, e))
}

/// One JSON document per line.
pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io(path))?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| LabError::format(path, e))?;
        out.write_all(b"\n").map_err(io(path))?;
    }
    out.flush().map_err(io(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io(path))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| LabError::format(path, format!("line {}: {e}", i + 1)))?;
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeWords {
    pub name: String,
    pub words: Vec<String>,
}

/// Word lists and template of the instruction language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyManifest {
    pub cardinalities: Cardinalities,
    pub template_prefix: Vec<String>,
    /// Attribute name at each slot after the prefix.
    pub slot_order: Vec<String>,
    pub attributes: Vec<AttributeWords>,
    /// Full token list in index order.
    pub tokens: Vec<String>,
}

impl VocabularyManifest {
    pub fn new(vocab: &Vocabulary) -> Self {
        let owned = |words: &[&str]| words.iter().map(|w| w.to_string()).collect();
        Self {
            cardinalities: *vocab.cardinalities(),
            template_prefix: owned(&TEMPLATE_PREFIX),
            slot_order: TEMPLATE_ORDER.iter().map(|&a| ATTRIBUTE_NAMES[a].to_string()).collect(),
            attributes: (0..ATTRIBUTE_NAMES.len())
                .map(|a| AttributeWords {
                    name: ATTRIBUTE_NAMES[a].to_string(),
                    words: owned(vocab.words(a)),
                })
                .collect(),
            tokens: owned(&vocab.tokens()),
        }
    }
}
