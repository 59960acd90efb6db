//! Templated instruction language over object attributes.
//!
//! Every instruction follows the single template
//! `fetch a <size> <shade> <color> <type>`, so a goal and its token sequence
//! determine each other. Goals also have a concatenated one-hot encoding used
//! to condition the Q-network.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::gridworld::{Attributes, Cardinalities, ObjectSpec, NUM_ATTRIBUTES};
use crate::rng::{self, LabRng};

pub const SHADE_WORDS: &[&str] = &["light", "dark", "pale", "vivid"];
pub const SIZE_WORDS: &[&str] = &["tiny", "small", "big", "huge", "giant"];
pub const COLOR_WORDS: &[&str] = &["blue", "red", "green", "yellow", "purple", "grey", "orange"];
pub const TYPE_WORDS: &[&str] = &["ball", "box", "key", "cube", "cone", "ring"];

const WORD_LISTS: [&[&str]; NUM_ATTRIBUTES] = [SHADE_WORDS, SIZE_WORDS, COLOR_WORDS, TYPE_WORDS];

/// Leading template words, followed by one word per attribute.
pub const TEMPLATE_PREFIX: [&str; 2] = ["fetch", "a"];
/// Attribute rendered at each slot after the prefix: size, shade, color, type.
pub const TEMPLATE_ORDER: [usize; NUM_ATTRIBUTES] = [1, 0, 2, 3];
pub const INSTRUCTION_LEN: usize = TEMPLATE_PREFIX.len() + NUM_ATTRIBUTES;

/// A goal is an attribute tuple; tokens and encodings are derived views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Goal {
    pub attrs: Attributes,
}

impl Goal {
    pub const fn new(attrs: Attributes) -> Self {
        Self { attrs }
    }

    /// Concatenated one-hot vector of length `cards.total_values()`.
    pub fn encode(&self, cards: &Cardinalities) -> Vec<f32> {
        let mut out = alloc::vec![0.0; cards.total_values()];
        for i in self.active_indices(cards) {
            out[i as usize] = 1.0;
        }
        out
    }

    /// Positions of the four set bits of [`Goal::encode`].
    pub fn active_indices(&self, cards: &Cardinalities) -> [u32; NUM_ATTRIBUTES] {
        let offsets = cards.offsets();
        let mut out = [0; NUM_ATTRIBUTES];
        for k in 0..NUM_ATTRIBUTES {
            out[k] = (offsets[k] + self.attrs.get(k) as usize) as u32;
        }
        out
    }
}

/// Word lists for a given set of cardinalities, plus the token index space
/// shared with anything that consumes instructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    cards: Cardinalities,
}

impl Vocabulary {
    pub fn new(cards: Cardinalities) -> Result<Self> {
        for (k, list) in WORD_LISTS.iter().enumerate() {
            if cards.get(k) as usize > list.len() {
                bail!(
                    Config,
                    "{} cardinality {} exceeds the {} available words",
                    crate::gridworld::ATTRIBUTE_NAMES[k],
                    cards.get(k),
                    list.len()
                );
            }
        }
        Ok(Self { cards })
    }

    pub fn cardinalities(&self) -> &Cardinalities {
        &self.cards
    }

    /// Words usable for one attribute.
    pub fn words(&self, attribute: usize) -> &'static [&'static str] {
        &WORD_LISTS[attribute][..self.cards.get(attribute) as usize]
    }

    /// All tokens in index order: template prefix, then shade, size, color
    /// and type words.
    pub fn tokens(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = TEMPLATE_PREFIX.to_vec();
        for k in 0..NUM_ATTRIBUTES {
            out.extend_from_slice(self.words(k));
        }
        out
    }

    pub fn token_index(&self, word: &str) -> Option<usize> {
        self.tokens().iter().position(|&w| w == word)
    }

    pub fn render(&self, goal: &Goal) -> Result<Vec<&'static str>> {
        render_instruction(self, goal)
    }

    pub fn parse<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Goal> {
        parse_instruction(self, tokens)
    }

    /// Every goal of the universe, ordered by attribute index.
    pub fn universe(&self) -> Vec<Goal> {
        self.cards.universe().map(Goal::new).collect()
    }
}

pub fn render_instruction(vocab: &Vocabulary, goal: &Goal) -> Result<Vec<&'static str>> {
    if !vocab.cards.contains(&goal.attrs) {
        bail!(Usage, "goal {:?} outside the vocabulary", goal.attrs);
    }
    let mut out: Vec<&'static str> = TEMPLATE_PREFIX.to_vec();
    for &k in &TEMPLATE_ORDER {
        out.push(vocab.words(k)[goal.attrs.get(k) as usize]);
    }
    Ok(out)
}

/// Renders the instruction as a single space-separated sentence.
pub fn render_sentence(vocab: &Vocabulary, goal: &Goal) -> Result<String> {
    Ok(render_instruction(vocab, goal)?.join(" "))
}

pub fn parse_instruction<S: AsRef<str>>(vocab: &Vocabulary, tokens: &[S]) -> Result<Goal> {
    let parse_err = |position: usize, token: &str, reason: &str| Error::Parse {
        position,
        token: token.to_string(),
        reason: reason.to_string(),
    };
    for (i, &expected) in TEMPLATE_PREFIX.iter().enumerate() {
        match tokens.get(i) {
            Some(t) if t.as_ref() == expected => {}
            Some(t) => return Err(parse_err(i, t.as_ref(), "unexpected word")),
            None => return Err(parse_err(i, "<end>", "instruction too short")),
        }
    }
    let mut attrs = Attributes::default();
    for (slot, &k) in TEMPLATE_ORDER.iter().enumerate() {
        let position = TEMPLATE_PREFIX.len() + slot;
        let Some(tok) = tokens.get(position) else {
            return Err(parse_err(position, "<end>", "instruction too short"));
        };
        let tok = tok.as_ref();
        let Some(value) = vocab.words(k).iter().position(|&w| w == tok) else {
            let reason = alloc::format!(
                "unknown {} word",
                crate::gridworld::ATTRIBUTE_NAMES[k]
            );
            return Err(parse_err(position, tok, &reason));
        };
        attrs.set(k, value as u8);
    }
    if let Some(extra) = tokens.get(INSTRUCTION_LEN) {
        return Err(parse_err(INSTRUCTION_LEN, extra.as_ref(), "trailing word"));
    }
    Ok(Goal::new(attrs))
}

/// Splits on whitespace and parses.
pub fn parse_sentence(vocab: &Vocabulary, sentence: &str) -> Result<Goal> {
    let tokens: Vec<&str> = sentence.split_whitespace().collect();
    parse_instruction(vocab, &tokens)
}

/// Disjoint train/test partition of a goal set in which every attribute value
/// present in the universe occurs on both sides.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoalSplit {
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<Goal>,
    pub test: Vec<Goal>,
}

impl GoalSplit {
    pub fn is_train(&self, goal: &Goal) -> bool {
        self.train.binary_search(goal).is_ok()
    }
}

const SPLIT_ATTEMPTS: usize = 10_000;

/// Seeded random split; redraws the permutation until both sides cover every
/// attribute value.
pub fn split_goals(universe: &[Goal], test_fraction: f64, seed: u64) -> Result<GoalSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        bail!(Config, "test_fraction must lie in (0, 1), got {test_fraction}");
    }
    let n = universe.len();
    let n_test = libm_round(n as f64 * test_fraction);
    let n_train = n - n_test;
    let needed = (0..NUM_ATTRIBUTES)
        .map(|k| distinct_values(universe.iter(), k))
        .max()
        .unwrap_or(0);
    if n_test < needed || n_train < needed {
        bail!(
            Config,
            "a {n_train}/{n_test} split cannot cover {needed} values per attribute on both sides"
        );
    }

    let mut rng: LabRng = rng::seeded(seed);
    let mut order: Vec<Goal> = universe.to_vec();
    order.sort();
    for _ in 0..SPLIT_ATTEMPTS {
        order.shuffle(&mut rng);
        let (test, train) = order.split_at(n_test);
        if covers(universe, train) && covers(universe, test) {
            let mut train = train.to_vec();
            let mut test = test.to_vec();
            train.sort();
            test.sort();
            return Ok(GoalSplit {
                seed,
                test_fraction,
                train,
                test,
            });
        }
    }
    bail!(
        Config,
        "no covering {n_train}/{n_test} split found in {SPLIT_ATTEMPTS} draws"
    )
}

fn libm_round(x: f64) -> usize {
    num_traits::Float::round(x) as usize
}

fn distinct_values<'a>(goals: impl Iterator<Item = &'a Goal>, attribute: usize) -> usize {
    let mut seen = [false; 256];
    let mut count = 0;
    for g in goals {
        let v = g.attrs.get(attribute) as usize;
        if !seen[v] {
            seen[v] = true;
            count += 1;
        }
    }
    count
}

fn covers(universe: &[Goal], side: &[Goal]) -> bool {
    (0..NUM_ATTRIBUTES).all(|k| {
        let mut present = [false; 256];
        for g in side {
            present[g.attrs.get(k) as usize] = true;
        }
        universe.iter().all(|g| present[g.attrs.get(k) as usize])
    })
}

/// Perfect describer: the goal naming exactly the picked object.
pub fn oracle_describe(picked: &ObjectSpec) -> Goal {
    Goal::new(picked.attrs)
}

/// Oracle description where each attribute is independently swapped, with
/// probability `p`, for a uniformly drawn *different* value.
pub fn noisy_describe(
    picked: &ObjectSpec,
    p: f64,
    cards: &Cardinalities,
    rng: &mut LabRng,
) -> Goal {
    let mut attrs = picked.attrs;
    for k in 0..NUM_ATTRIBUTES {
        let swap = rng.gen::<f64>() < p;
        let card = cards.get(k);
        if swap && card > 1 {
            let old = attrs.get(k);
            let mut new = rng.gen_range(0..card - 1);
            if new >= old {
                new += 1;
            }
            attrs.set(k, new);
        }
    }
    Goal::new(attrs)
}
