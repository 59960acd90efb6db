//! Instruction-following gridworld.
//!
//! A rectangular room surrounded by walls holds a handful of objects, each
//! described by four categorical attributes (shade, size, color, type). The
//! agent sees a square egocentric window in front of it, can turn, move
//! forward and pick the object it faces. Picking ends the episode; the pick
//! is rewarded when the object matches every attribute of the goal.
//!
//! Grid dimensions include the boundary walls, so a `rows × cols` room has
//! `(rows - 2) × (cols - 2)` free cells.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::error::{bail, Result};
use crate::language::Goal;
use crate::rng;

/// Number of attributes carried by every object.
pub const NUM_ATTRIBUTES: usize = 4;

/// Attribute names in canonical order.
pub const ATTRIBUTE_NAMES: [&str; NUM_ATTRIBUTES] = ["shade", "size", "color", "type"];

/// The four categorical attribute indices of an object or goal, in canonical
/// order (shade, size, color, type).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attributes {
    pub shade: u8,
    pub size: u8,
    pub color: u8,
    pub obj_type: u8,
}

impl Attributes {
    pub const fn new(shade: u8, size: u8, color: u8, obj_type: u8) -> Self {
        Self {
            shade,
            size,
            color,
            obj_type,
        }
    }

    pub fn from_array(values: [u8; NUM_ATTRIBUTES]) -> Self {
        Self::new(values[0], values[1], values[2], values[3])
    }

    pub fn to_array(self) -> [u8; NUM_ATTRIBUTES] {
        [self.shade, self.size, self.color, self.obj_type]
    }

    pub fn get(&self, attribute: usize) -> u8 {
        self.to_array()[attribute]
    }

    pub fn set(&mut self, attribute: usize, value: u8) {
        match attribute {
            0 => self.shade = value,
            1 => self.size = value,
            2 => self.color = value,
            3 => self.obj_type = value,
            _ => panic!("attribute index {attribute} out of range"),
        }
    }

    /// Number of attributes on which `self` and `other` agree.
    pub fn matches(&self, other: &Attributes) -> usize {
        let a = self.to_array();
        let b = other.to_array();
        (0..NUM_ATTRIBUTES).filter(|&k| a[k] == b[k]).count()
    }
}

/// Per-attribute number of values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cardinalities(pub [u8; NUM_ATTRIBUTES]);

impl Cardinalities {
    /// 3 shades, 4 sizes, 5 colors, 5 types: 300 distinct objects.
    pub const PAPER: Cardinalities = Cardinalities([3, 4, 5, 5]);
    /// 2 shades, 2 sizes, 3 colors, 3 types: 36 distinct objects.
    pub const DESK: Cardinalities = Cardinalities([2, 2, 3, 3]);

    pub fn get(&self, attribute: usize) -> u8 {
        self.0[attribute]
    }

    /// Number of distinct attribute tuples.
    pub fn universe_size(&self) -> usize {
        self.0.iter().map(|&c| c as usize).product()
    }

    /// Sum of cardinalities, i.e. the length of a concatenated one-hot code.
    pub fn total_values(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// Offset of each attribute's block inside a concatenated one-hot code.
    pub fn offsets(&self) -> [usize; NUM_ATTRIBUTES] {
        let mut out = [0; NUM_ATTRIBUTES];
        let mut acc = 0;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = acc;
            acc += self.0[k] as usize;
        }
        out
    }

    pub fn contains(&self, attrs: &Attributes) -> bool {
        attrs
            .to_array()
            .iter()
            .zip(self.0.iter())
            .all(|(&v, &c)| v < c)
    }

    /// Mixed-radix index of `attrs` in `0..universe_size()`, type varying fastest.
    pub fn index_of(&self, attrs: &Attributes) -> usize {
        attrs
            .to_array()
            .iter()
            .zip(self.0.iter())
            .fold(0, |acc, (&v, &c)| acc * c as usize + v as usize)
    }

    pub fn from_index(&self, mut idx: usize) -> Attributes {
        let mut values = [0u8; NUM_ATTRIBUTES];
        for k in (0..NUM_ATTRIBUTES).rev() {
            let c = self.0[k] as usize;
            values[k] = (idx % c) as u8;
            idx /= c;
        }
        Attributes::from_array(values)
    }

    /// Every attribute tuple, ordered by [`Cardinalities::index_of`].
    pub fn universe(&self) -> impl Iterator<Item = Attributes> + '_ {
        (0..self.universe_size()).map(move |i| self.from_index(i))
    }
}

/// Grid coordinates; row 0 is the top wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pos {
    pub row: i32,
    pub col: i32,
}

impl Pos {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn offset(self, (dr, dc): (i32, i32), steps: i32) -> Pos {
        Pos::new(self.row + dr * steps, self.col + dc * steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Heading {
    Up,
    Right,
    Down,
    Left,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::Up, Heading::Right, Heading::Down, Heading::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Heading {
        Heading::ALL[i % 4]
    }

    pub fn turn_right(self) -> Heading {
        Heading::from_index(self.index() + 1)
    }

    pub fn turn_left(self) -> Heading {
        Heading::from_index(self.index() + 3)
    }

    /// (row, col) displacement of one step forward.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::Up => (-1, 0),
            Heading::Right => (0, 1),
            Heading::Down => (1, 0),
            Heading::Left => (0, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Action {
    Forward,
    Left,
    Right,
    Pick,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Forward, Action::Left, Action::Right, Action::Pick];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }
}

/// One object in the room.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectSpec {
    pub attrs: Attributes,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OutcomeTag {
    Success,
    WrongPick,
    TimeOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RewardMode {
    /// 1 for picking an object matching every goal attribute, else 0.
    #[default]
    Sparse,
    /// 0.25 per matching attribute of the picked object.
    Shaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvConfig {
    /// Grid height including the boundary walls.
    pub rows: u16,
    /// Grid width including the boundary walls.
    pub cols: u16,
    pub num_objects: u16,
    pub max_steps: u16,
    /// Side of the square egocentric view; odd.
    pub view_size: u16,
    pub cardinalities: Cardinalities,
}

impl EnvConfig {
    /// 10×10 room, 10 objects, 300-object universe, 40 steps, 7×7 view.
    pub fn paper() -> Self {
        Self {
            rows: 10,
            cols: 10,
            num_objects: 10,
            max_steps: 40,
            view_size: 7,
            cardinalities: Cardinalities::PAPER,
        }
    }

    /// 6×6 room, 6 objects, 36-object universe, 30 steps, 7×7 view.
    pub fn desk() -> Self {
        Self {
            rows: 6,
            cols: 6,
            num_objects: 6,
            max_steps: 30,
            view_size: 7,
            cardinalities: Cardinalities::DESK,
        }
    }

    pub fn free_cells(&self) -> usize {
        (self.rows.saturating_sub(2) as usize) * (self.cols.saturating_sub(2) as usize)
    }

    /// Channels per observed cell: four occupancy classes plus one one-hot
    /// block per attribute.
    pub fn channels(&self) -> usize {
        OCCUPANCY_CHANNELS + self.cardinalities.total_values()
    }

    /// Length of the flattened observation.
    pub fn observation_len(&self) -> usize {
        let v = self.view_size as usize;
        v * v * self.channels()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 3 || self.cols < 3 {
            bail!(Config, "grid {}x{} has no free cell inside its walls", self.rows, self.cols);
        }
        if self.view_size < 3 || self.view_size % 2 == 0 {
            bail!(Config, "view_size must be odd and at least 3, got {}", self.view_size);
        }
        if self.max_steps == 0 {
            bail!(Config, "max_steps must be positive");
        }
        if self.cardinalities.0.iter().any(|&c| c == 0) {
            bail!(Config, "every attribute needs at least one value");
        }
        let needed = self.num_objects as usize + 1;
        if needed > self.free_cells() {
            bail!(
                Config,
                "grid {}x{} has {} free cells, cannot host {} objects and the agent",
                self.rows,
                self.cols,
                self.free_cells(),
                self.num_objects
            );
        }
        if self.num_objects as usize > self.cardinalities.universe_size() {
            bail!(
                Config,
                "{} distinct objects requested from a universe of {}",
                self.num_objects,
                self.cardinalities.universe_size()
            );
        }
        Ok(())
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::paper()
    }
}

/// Full simulator state of one episode.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridState {
    pub rows: u16,
    pub cols: u16,
    pub objects: Vec<ObjectSpec>,
    pub agent_pos: Pos,
    pub agent_dir: Heading,
    pub steps_elapsed: u16,
    pub picked: Option<ObjectSpec>,
    pub goal: Goal,
    pub outcome: Option<OutcomeTag>,
}

impl GridState {
    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn object_at(&self, pos: Pos) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.pos == pos)
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.row >= 0 && pos.col >= 0 && pos.row < self.rows as i32 && pos.col < self.cols as i32
    }

    pub fn is_wall(&self, pos: Pos) -> bool {
        self.in_bounds(pos)
            && (pos.row == 0
                || pos.col == 0
                || pos.row == self.rows as i32 - 1
                || pos.col == self.cols as i32 - 1)
    }

    /// Inside the walls and not holding an object.
    pub fn is_free(&self, pos: Pos) -> bool {
        self.in_bounds(pos) && !self.is_wall(pos) && self.object_at(pos).is_none()
    }

    pub fn front(&self) -> Pos {
        self.agent_pos.offset(self.agent_dir.delta(), 1)
    }

    /// The object matching the goal, if the room holds one.
    pub fn goal_object(&self) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| satisfies(&o.attrs, &self.goal))
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub reward: f32,
    pub done: bool,
    pub outcome: Option<OutcomeTag>,
    /// The object picked by this action, if any.
    pub picked: Option<ObjectSpec>,
}

/// Occupancy channels, exactly one of which is set for every observed cell.
pub const CH_FLOOR: usize = 0;
pub const CH_OBJECT: usize = 1;
pub const CH_WALL: usize = 2;
pub const CH_OUT_OF_BOUNDS: usize = 3;
pub const OCCUPANCY_CHANNELS: usize = 4;

/// Egocentric binary observation stored as the sorted list of active channels
/// of the flattened `view × view × channels` tensor.
///
/// The agent sits at the bottom-center cell of the window, facing up.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub view_size: u16,
    pub channels: u16,
    pub active: Vec<u32>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.view_size as usize * self.view_size as usize * self.channels as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.view_size as usize + col) * self.channels as usize + channel
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> bool {
        self.active
            .binary_search(&(self.flat_index(row, col, channel) as u32))
            .is_ok()
    }

    /// Active channels of one view cell.
    pub fn cell(&self, row: usize, col: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.channels as usize;
        let start = self.flat_index(row, col, 0);
        self.active
            .iter()
            .map(|&i| i as usize)
            .filter(move |&i| i >= start && i < start + c)
            .map(move |i| i - start)
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut out = vec![0.0; self.len()];
        for &i in &self.active {
            out[i as usize] = 1.0;
        }
        out
    }

    /// View cell directly in front of the agent.
    pub fn facing_cell(&self) -> (usize, usize) {
        let v = self.view_size as usize;
        (v - 2, v / 2)
    }
}

/// `f(s, g)`: the picked object fulfils the goal iff all four attributes agree.
pub fn satisfies(picked: &Attributes, goal: &Goal) -> bool {
    picked == &goal.attrs
}

/// 0.25 for each attribute of the picked object matching the goal.
pub fn shaped_reward(picked: &Attributes, goal: &Goal) -> f32 {
    0.25 * picked.matches(&goal.attrs) as f32
}

/// The environment: configuration plus reward function. Holds no per-episode
/// state, so one instance can serve any number of [`GridState`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    config: EnvConfig,
    reward_mode: RewardMode,
}

const MAX_LAYOUT_ATTEMPTS: usize = 256;

impl GridWorld {
    pub fn new(config: EnvConfig) -> Result<Self> {
        Self::with_reward(config, RewardMode::Sparse)
    }

    pub fn with_reward(config: EnvConfig, reward_mode: RewardMode) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            reward_mode,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn reward_mode(&self) -> RewardMode {
        self.reward_mode
    }

    /// Samples a new room for `goal`.
    ///
    /// The goal object is always placed (when the room holds any object) and
    /// the remaining objects are drawn without replacement from the rest of
    /// the universe, so the goal object is unique. Layouts where the agent
    /// cannot reach a cell facing the goal object are redrawn from the same
    /// stream.
    pub fn reset(&self, seed: u64, goal: Goal) -> Result<GridState> {
        let cfg = &self.config;
        if !cfg.cardinalities.contains(&goal.attrs) {
            bail!(Usage, "goal {:?} outside cardinalities {:?}", goal.attrs, cfg.cardinalities.0);
        }
        let mut rng = rng::seeded(seed);
        let inner_cols = cfg.cols as usize - 2;
        let free = cfg.free_cells();
        let n = cfg.num_objects as usize;
        let universe = cfg.cardinalities.universe_size();
        let goal_idx = cfg.cardinalities.index_of(&goal.attrs);

        for _ in 0..MAX_LAYOUT_ATTEMPTS {
            let mut kinds = Vec::with_capacity(n);
            if n > 0 {
                kinds.push(goal.attrs);
                for i in index::sample(&mut rng, universe - 1, n - 1).into_iter() {
                    let i = if i >= goal_idx { i + 1 } else { i };
                    kinds.push(cfg.cardinalities.from_index(i));
                }
            }
            let cells = index::sample(&mut rng, free, n + 1).into_vec();
            let to_pos = |c: usize| Pos::new((c / inner_cols) as i32 + 1, (c % inner_cols) as i32 + 1);
            let objects = kinds
                .into_iter()
                .zip(cells.iter())
                .map(|(attrs, &c)| ObjectSpec { attrs, pos: to_pos(c) })
                .collect();
            let state = GridState {
                rows: cfg.rows,
                cols: cfg.cols,
                objects,
                agent_pos: to_pos(cells[n]),
                agent_dir: Heading::from_index(rng.gen_range(0..4)),
                steps_elapsed: 0,
                picked: None,
                goal,
                outcome: None,
            };
            if n == 0 || goal_reachable(&state) {
                return Ok(state);
            }
        }
        bail!(
            Config,
            "no layout with a reachable goal object after {MAX_LAYOUT_ATTEMPTS} draws"
        )
    }

    pub fn step(&self, state: &mut GridState, action: Action) -> Result<StepResult> {
        if state.is_terminal() {
            bail!(Usage, "step called on a terminal state");
        }
        state.steps_elapsed += 1;
        let mut picked = None;
        match action {
            Action::Left => state.agent_dir = state.agent_dir.turn_left(),
            Action::Right => state.agent_dir = state.agent_dir.turn_right(),
            Action::Forward => {
                let front = state.front();
                if state.is_free(front) {
                    state.agent_pos = front;
                }
            }
            Action::Pick => {
                picked = state.object_at(state.front()).copied();
            }
        }

        let mut reward = 0.0;
        if let Some(obj) = picked {
            state.picked = Some(obj);
            let success = satisfies(&obj.attrs, &state.goal);
            reward = match self.reward_mode {
                RewardMode::Sparse => {
                    if success {
                        1.0
                    } else {
                        0.0
                    }
                }
                RewardMode::Shaped => shaped_reward(&obj.attrs, &state.goal),
            };
            state.outcome = Some(if success {
                OutcomeTag::Success
            } else {
                OutcomeTag::WrongPick
            });
        } else if state.steps_elapsed >= self.config.max_steps {
            state.outcome = Some(OutcomeTag::TimeOut);
        }

        Ok(StepResult {
            reward,
            done: state.outcome.is_some(),
            outcome: state.outcome,
            picked,
        })
    }

    pub fn observe(&self, state: &GridState) -> Observation {
        let cfg = &self.config;
        let v = cfg.view_size as i32;
        let channels = cfg.channels();
        let offsets = cfg.cardinalities.offsets();
        let forward = state.agent_dir.delta();
        let right = state.agent_dir.turn_right().delta();
        let mut active = Vec::with_capacity((v * v) as usize + 4 * state.objects.len());

        for vr in 0..v {
            for vc in 0..v {
                let ahead = v - 1 - vr;
                let lateral = vc - v / 2;
                let world = state.agent_pos.offset(forward, ahead).offset(right, lateral);
                let base = ((vr * v + vc) as usize * channels) as u32;
                if !state.in_bounds(world) {
                    active.push(base + CH_OUT_OF_BOUNDS as u32);
                } else if state.is_wall(world) {
                    active.push(base + CH_WALL as u32);
                } else if let Some(obj) = state.object_at(world) {
                    active.push(base + CH_OBJECT as u32);
                    for (k, &off) in offsets.iter().enumerate() {
                        let ch = OCCUPANCY_CHANNELS + off + obj.attrs.get(k) as usize;
                        active.push(base + ch as u32);
                    }
                } else {
                    active.push(base + CH_FLOOR as u32);
                }
            }
        }

        Observation {
            view_size: cfg.view_size,
            channels: channels as u16,
            active,
        }
    }
}

/// Whether some free cell orthogonally adjacent to the goal object is
/// reachable from the agent through free cells.
fn goal_reachable(state: &GridState) -> bool {
    let Some(target) = state.goal_object().map(|o| o.pos) else {
        return false;
    };
    let cols = state.cols as usize;
    let mut seen = vec![false; state.rows as usize * cols];
    let mut queue = VecDeque::new();
    seen[state.agent_pos.row as usize * cols + state.agent_pos.col as usize] = true;
    queue.push_back(state.agent_pos);
    while let Some(p) = queue.pop_front() {
        for h in Heading::ALL {
            let q = p.offset(h.delta(), 1);
            if q == target {
                return true;
            }
            if state.is_free(q) {
                let i = q.row as usize * cols + q.col as usize;
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    false
}

/// Layout statistics describing how redundant the attributes of a room are.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscriminativeStats {
    /// Mean, over layouts, of the smallest number of attributes that single
    /// out the goal object among the room's objects.
    pub mean_min_discriminative_features: f64,
    /// Fraction of object pairs within a room sharing at least one attribute.
    pub share_one_property_rate: f64,
}

pub fn discriminative_stats(layouts: &[GridState]) -> Result<DiscriminativeStats> {
    if layouts.is_empty() {
        bail!(Usage, "discriminative_stats needs at least one layout");
    }
    let mut feature_sum = 0usize;
    let mut pairs = 0usize;
    let mut sharing = 0usize;
    for (i, layout) in layouts.iter().enumerate() {
        let Some(goal_obj) = layout.goal_object() else {
            bail!(Usage, "layout {i} holds no object matching its goal");
        };
        feature_sum += min_discriminative_features(&goal_obj.attrs, &layout.objects);
        for (a, oa) in layout.objects.iter().enumerate() {
            for ob in &layout.objects[a + 1..] {
                pairs += 1;
                if oa.attrs.matches(&ob.attrs) > 0 {
                    sharing += 1;
                }
            }
        }
    }
    Ok(DiscriminativeStats {
        mean_min_discriminative_features: feature_sum as f64 / layouts.len() as f64,
        share_one_property_rate: if pairs == 0 {
            0.0
        } else {
            sharing as f64 / pairs as f64
        },
    })
}

/// Smallest attribute subset on which `target` differs from every other
/// object; a room holding only the target needs one feature by convention.
fn min_discriminative_features(target: &Attributes, objects: &[ObjectSpec]) -> usize {
    let others: Vec<&Attributes> = objects
        .iter()
        .map(|o| &o.attrs)
        .filter(|a| *a != target)
        .collect();
    if others.is_empty() {
        return 1;
    }
    let mut best = NUM_ATTRIBUTES;
    for mask in 1u8..(1 << NUM_ATTRIBUTES) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let separates = others.iter().all(|o| {
            (0..NUM_ATTRIBUTES).any(|k| mask & (1 << k) != 0 && o.get(k) != target.get(k))
        });
        if separates {
            best = size;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn goal(s: u8, z: u8, c: u8, t: u8) -> Goal {
        Goal::new(Attributes::new(s, z, c, t))
    }

    fn empty_room(rows: u16, cols: u16, pos: Pos, dir: Heading) -> GridState {
        GridState {
            rows,
            cols,
            objects: Vec::new(),
            agent_pos: pos,
            agent_dir: dir,
            steps_elapsed: 0,
            picked: None,
            goal: goal(0, 0, 0, 0),
            outcome: None,
        }
    }

    #[test]
    fn paper_reset_places_distinct_objects_with_unique_goal() {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let g = goal(0, 0, 2, 0);
        let s = env.reset(7, g).unwrap();
        assert_eq!(s.objects.len(), 10);
        let mut cells: Vec<_> = s.objects.iter().map(|o| o.pos).collect();
        cells.push(s.agent_pos);
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 11);
        assert_eq!(s.objects.iter().filter(|o| satisfies(&o.attrs, &g)).count(), 1);
        assert!(s.objects.iter().all(|o| !s.is_wall(o.pos) && s.in_bounds(o.pos)));
    }

    #[test]
    fn tiny_room_without_objects() {
        let cfg = EnvConfig {
            rows: 3,
            cols: 3,
            num_objects: 0,
            ..EnvConfig::paper()
        };
        let env = GridWorld::new(cfg).unwrap();
        let s = env.reset(0, goal(0, 0, 0, 0)).unwrap();
        assert!(s.objects.is_empty());
        assert_eq!(s.agent_pos, Pos::new(1, 1));
    }

    #[test]
    fn overcrowded_grid_is_a_config_error() {
        let cfg = EnvConfig {
            rows: 4,
            cols: 4,
            num_objects: 4,
            ..EnvConfig::paper()
        };
        assert!(matches!(GridWorld::new(cfg), Err(crate::Error::Config(_))));
    }

    #[test]
    fn reset_is_deterministic() {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let g = goal(1, 2, 3, 4);
        assert_eq!(env.reset(99, g).unwrap(), env.reset(99, g).unwrap());
        assert_ne!(env.reset(99, g).unwrap(), env.reset(100, g).unwrap());
    }

    #[test]
    fn forward_into_wall_is_blocked() {
        let env = GridWorld::new(EnvConfig::desk()).unwrap();
        let mut s = empty_room(6, 6, Pos::new(1, 1), Heading::Up);
        let r = env.step(&mut s, Action::Forward).unwrap();
        assert_eq!(s.agent_pos, Pos::new(1, 1));
        assert_eq!(r.reward, 0.0);
        assert!(!r.done);
    }

    #[test]
    fn forward_into_object_is_blocked() {
        let env = GridWorld::new(EnvConfig::desk()).unwrap();
        let mut s = empty_room(6, 6, Pos::new(2, 1), Heading::Up);
        s.objects.push(ObjectSpec {
            attrs: Attributes::new(0, 0, 0, 1),
            pos: Pos::new(1, 1),
        });
        env.step(&mut s, Action::Forward).unwrap();
        assert_eq!(s.agent_pos, Pos::new(2, 1));
    }

    #[test]
    fn picking_goal_object_succeeds() {
        let env = GridWorld::new(EnvConfig::desk()).unwrap();
        let mut s = empty_room(6, 6, Pos::new(2, 2), Heading::Right);
        s.goal = goal(1, 0, 2, 1);
        s.objects.push(ObjectSpec {
            attrs: Attributes::new(1, 0, 2, 1),
            pos: Pos::new(2, 3),
        });
        let r = env.step(&mut s, Action::Pick).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(r.done);
        assert_eq!(r.outcome, Some(OutcomeTag::Success));
        assert!(matches!(env.step(&mut s, Action::Left), Err(crate::Error::Usage(_))));
    }

    #[test]
    fn wrong_pick_ends_episode_without_reward() {
        let env = GridWorld::new(EnvConfig::desk()).unwrap();
        let mut s = empty_room(6, 6, Pos::new(2, 2), Heading::Down);
        s.goal = goal(1, 0, 2, 1);
        s.objects.push(ObjectSpec {
            attrs: Attributes::new(1, 0, 2, 0),
            pos: Pos::new(3, 2),
        });
        let r = env.step(&mut s, Action::Pick).unwrap();
        assert_eq!((r.reward, r.done, r.outcome), (0.0, true, Some(OutcomeTag::WrongPick)));
        assert_eq!(s.picked.unwrap().attrs, Attributes::new(1, 0, 2, 0));
    }

    #[test]
    fn pick_on_empty_cell_does_nothing() {
        let env = GridWorld::new(EnvConfig::desk()).unwrap();
        let mut s = empty_room(6, 6, Pos::new(2, 2), Heading::Down);
        let r = env.step(&mut s, Action::Pick).unwrap();
        assert!(!r.done);
        assert!(s.picked.is_none());
    }

    #[test]
    fn time_out_at_step_limit() {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let mut s = env.reset(3, goal(0, 0, 0, 0)).unwrap();
        for t in 1..=40 {
            let r = env.step(&mut s, Action::Left).unwrap();
            assert_eq!(r.reward, 0.0);
            assert_eq!(r.done, t == 40);
        }
        assert_eq!(s.outcome, Some(OutcomeTag::TimeOut));
    }

    #[test]
    fn shaped_rewards() {
        let g = goal(1, 2, 3, 4);
        assert_eq!(shaped_reward(&Attributes::new(1, 2, 3, 4), &g), 1.0);
        assert_eq!(shaped_reward(&Attributes::new(1, 2, 3, 0), &g), 0.75);
        assert_eq!(shaped_reward(&Attributes::new(0, 0, 0, 0), &g), 0.0);
    }

    #[test]
    fn shaped_env_rewards_partial_picks() {
        let env = GridWorld::with_reward(EnvConfig::desk(), RewardMode::Shaped).unwrap();
        let mut s = empty_room(6, 6, Pos::new(2, 2), Heading::Down);
        s.goal = goal(1, 0, 2, 1);
        s.objects.push(ObjectSpec {
            attrs: Attributes::new(1, 0, 0, 0),
            pos: Pos::new(3, 2),
        });
        let r = env.step(&mut s, Action::Pick).unwrap();
        assert_eq!((r.reward, r.done), (0.5, true));
    }

    #[test]
    fn corner_view_marks_out_of_bounds() {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let s = empty_room(10, 10, Pos::new(1, 1), Heading::Up);
        let obs = env.observe(&s);
        // Agent at bottom-center (6, 3); two cells ahead is beyond the top wall.
        assert!(obs.get(6, 3, CH_FLOOR));
        assert!(obs.get(5, 3, CH_WALL));
        assert!(obs.get(4, 3, CH_OUT_OF_BOUNDS));
        assert!(obs.get(6, 2, CH_WALL));
        assert!(obs.get(6, 0, CH_OUT_OF_BOUNDS));
    }

    #[test]
    fn empty_room_has_only_floor_wall_and_bounds_channels() {
        let env = GridWorld::new(EnvConfig::paper()).unwrap();
        let s = empty_room(10, 10, Pos::new(5, 5), Heading::Left);
        let obs = env.observe(&s);
        assert_eq!(obs.active.len(), 49);
        for r in 0..7 {
            for c in 0..7 {
                let cell: Vec<_> = obs.cell(r, c).collect();
                assert_eq!(cell.len(), 1);
                assert!(cell[0] < OCCUPANCY_CHANNELS && cell[0] != CH_OBJECT);
            }
        }
    }

    #[test]
    fn facing_object_is_in_front_cell() {
        let env = GridWorld::new(EnvConfig::desk()).unwrap();
        let mut s = empty_room(6, 6, Pos::new(2, 2), Heading::Right);
        s.objects.push(ObjectSpec {
            attrs: Attributes::new(1, 1, 2, 0),
            pos: Pos::new(2, 3),
        });
        let obs = env.observe(&s);
        let (r, c) = obs.facing_cell();
        let cell: Vec<_> = obs.cell(r, c).collect();
        let off = EnvConfig::desk().cardinalities.offsets();
        assert_eq!(
            cell,
            vec![CH_OBJECT, 4 + off[0] + 1, 4 + off[1] + 1, 4 + off[2] + 2, 4 + off[3]]
        );
    }

    #[test]
    fn single_object_room_needs_one_feature() {
        let mut s = empty_room(6, 6, Pos::new(1, 1), Heading::Up);
        s.objects.push(ObjectSpec {
            attrs: Attributes::new(0, 0, 0, 0),
            pos: Pos::new(2, 2),
        });
        let stats = discriminative_stats(&[s]).unwrap();
        assert_eq!(stats.mean_min_discriminative_features, 1.0);
        assert_eq!(stats.share_one_property_rate, 0.0);
        assert!(discriminative_stats(&[]).is_err());
    }

    #[test]
    fn cardinality_index_round_trip() {
        let cards = Cardinalities::PAPER;
        for (i, a) in cards.universe().enumerate() {
            assert_eq!(cards.index_of(&a), i);
        }
        assert_eq!(cards.universe_size(), 300);
        assert_eq!(cards.total_values(), 17);
    }
}
