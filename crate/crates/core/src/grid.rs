//! Static DoorKey world model: tiles, seeded layout generation, agent
//! kinematics and object interaction.
//!
//! The grid is square. `size` counts every cell including the border walls,
//! so the smallest layout that fits a divider, door, key, goal and agent is
//! 5x5. A vertical dividing wall splits the start side (left) from the goal
//! side (right); the only way through is the door.

use std::collections::VecDeque;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("invalid grid size {0}: must be at least {MIN_SIZE}")]
    InvalidSize(usize),
    #[error("no eligible cell to place the trigger tile")]
    Placement,
}

/// Cell coordinates: `x` is the column, `y` the row, both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Position {
    pub x: usize,
    pub y: usize,
}

impl Position {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Neighbouring cell in `dir`, or `None` when it would leave the
    /// non-negative quadrant.
    pub fn offset(self, dir: Direction) -> Option<Position> {
        let (dx, dy) = dir.delta();
        Some(Position {
            x: self.x.checked_add_signed(dx)?,
            y: self.y.checked_add_signed(dy)?,
        })
    }
}

impl From<(usize, usize)> for Position {
    fn from((x, y): (usize, usize)) -> Self {
        Self { x, y }
    }
}

impl From<Position> for (usize, usize) {
    fn from(p: Position) -> Self {
        (p.x, p.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Facing direction. The integer encoding (East=0 .. North=3) is part of the
/// trace format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Direction {
    East = 0,
    South = 1,
    West = 2,
    North = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::South,
        Direction::West,
        Direction::North,
    ];

    pub fn from_index(i: u8) -> Option<Direction> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn right(self) -> Direction {
        Self::ALL[(self.index() as usize + 1) % 4]
    }

    pub fn left(self) -> Direction {
        Self::ALL[(self.index() as usize + 3) % 4]
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
            Direction::North => (0, -1),
        }
    }
}

impl From<Direction> for u8 {
    fn from(d: Direction) -> u8 {
        d.index()
    }
}

impl TryFrom<u8> for Direction {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Direction::from_index(v).ok_or_else(|| format!("invalid direction code {v}"))
    }
}

/// Agent actions with their stable wire encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Noop = 6,
}

impl Action {
    pub const COUNT: usize = 7;

    pub const ALL: [Action; Action::COUNT] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Noop,
    ];

    pub fn from_index(i: u8) -> Option<Action> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.index()
    }
}

impl TryFrom<u8> for Action {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Action::from_index(v).ok_or_else(|| format!("invalid action code {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Yellow,
    Grey,
    Orange,
}

impl Color {
    pub const ALL: [Color; 7] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
        Color::Orange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Yellow => "yellow",
            Color::Grey => "grey",
            Color::Orange => "orange",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Color::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown color {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TileKind {
    Floor,
    Wall,
    Door { locked: bool, open: bool },
    Key,
    Goal,
    Trigger { color: Color },
}

impl TileKind {
    /// Whether the agent may stand on this tile.
    pub fn is_walkable(self) -> bool {
        matches!(
            self,
            TileKind::Floor
                | TileKind::Goal
                | TileKind::Trigger { .. }
                | TileKind::Door { open: true, .. }
        )
    }

    pub fn glyph(self) -> char {
        match self {
            TileKind::Floor => '.',
            TileKind::Wall => 'W',
            TileKind::Door { locked: true, .. } => 'D',
            TileKind::Door { open: true, .. } => 'd',
            TileKind::Door { .. } => '+',
            TileKind::Key => 'K',
            TileKind::Goal => 'G',
            TileKind::Trigger { .. } => 'T',
        }
    }
}

/// Square tile array, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    size: usize,
    cells: Vec<TileKind>,
}

impl Grid {
    /// A `size`x`size` grid of floor surrounded by walls.
    pub fn walled(size: usize) -> Self {
        let mut grid = Grid {
            size,
            cells: vec![TileKind::Floor; size * size],
        };
        for i in 0..size {
            grid.set(Position::new(i, 0), TileKind::Wall);
            grid.set(Position::new(i, size - 1), TileKind::Wall);
            grid.set(Position::new(0, i), TileKind::Wall);
            grid.set(Position::new(size - 1, i), TileKind::Wall);
        }
        grid
    }

    /// Parses the glyph format produced by [`render_text`], ignoring agent
    /// glyphs (which are read back as floor). Mostly useful for tests.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Option<Grid> {
        let size = rows.len();
        let mut cells = Vec::with_capacity(size * size);
        for row in rows {
            let row = row.as_ref();
            if row.chars().count() != size {
                return None;
            }
            for c in row.chars() {
                cells.push(match c {
                    '.' | '>' | 'v' | '<' | '^' => TileKind::Floor,
                    'W' => TileKind::Wall,
                    'D' => TileKind::Door {
                        locked: true,
                        open: false,
                    },
                    'd' => TileKind::Door {
                        locked: false,
                        open: true,
                    },
                    '+' => TileKind::Door {
                        locked: false,
                        open: false,
                    },
                    'K' => TileKind::Key,
                    'G' => TileKind::Goal,
                    'T' => TileKind::Trigger {
                        color: Color::Orange,
                    },
                    _ => return None,
                });
            }
        }
        Some(Grid { size, cells })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x < self.size && p.y < self.size
    }

    pub fn get(&self, p: Position) -> TileKind {
        self.cells[p.y * self.size + p.x]
    }

    /// Like [`Grid::get`] but `None` outside the grid.
    pub fn try_get(&self, p: Position) -> Option<TileKind> {
        self.contains(p).then(|| self.get(p))
    }

    pub fn set(&mut self, p: Position, tile: TileKind) {
        self.cells[p.y * self.size + p.x] = tile;
    }

    /// All positions in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.size).flat_map(move |y| (0..self.size).map(move |x| Position::new(x, y)))
    }

    /// First matching cell in row-major order.
    pub fn find(&self, pred: impl Fn(TileKind) -> bool) -> Option<Position> {
        let i = self.cells.iter().position(|&t| pred(t))?;
        Some(Position::new(i % self.size, i / self.size))
    }

    pub fn count(&self, pred: impl Fn(TileKind) -> bool) -> usize {
        self.cells.iter().filter(|&&t| pred(t)).count()
    }

    pub fn door(&self) -> Option<(Position, TileKind)> {
        self.find(|t| matches!(t, TileKind::Door { .. }))
            .map(|p| (p, self.get(p)))
    }

    pub fn key(&self) -> Option<Position> {
        self.find(|t| t == TileKind::Key)
    }

    pub fn goal(&self) -> Option<Position> {
        self.find(|t| t == TileKind::Goal)
    }

    pub fn trigger(&self) -> Option<Position> {
        self.find(|t| matches!(t, TileKind::Trigger { .. }))
    }

    /// Hash of the tile contents. Stable within a process; used to detect
    /// layout changes, not persisted.
    pub fn layout_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

/// Rule switches imposed on the base kinematics by the dynamics layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleOverrides {
    pub key_enabled: bool,
}

impl Default for RuleOverrides {
    fn default() -> Self {
        Self { key_enabled: true }
    }
}

/// What a single `step_world` call did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub progress: bool,
    pub reached_goal: bool,
    pub trigger_activated: bool,
    /// A locked door was unlocked by a key toggle.
    pub key_unlocked_door: bool,
}

/// Full world: grid contents, agent pose and inventory, and the PRNG stream
/// used for any later seeded placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    grid: Grid,
    agent_pos: Position,
    agent_dir: Direction,
    carrying_key: bool,
    divider_col: usize,
    rng: ChaCha8Rng,
}

impl WorldState {
    /// Builds a world from explicit parts. The caller is responsible for the
    /// layout invariants; `generate_layout` is the normal constructor.
    pub fn from_parts(
        grid: Grid,
        agent_pos: Position,
        agent_dir: Direction,
        carrying_key: bool,
        divider_col: usize,
        rng_seed: u64,
    ) -> Self {
        Self {
            grid,
            agent_pos,
            agent_dir,
            carrying_key,
            divider_col,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
    }

    pub fn size(&self) -> usize {
        self.grid.size
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut Grid {
        &mut self.grid
    }

    pub fn agent_pos(&self) -> Position {
        self.agent_pos
    }

    pub fn agent_dir(&self) -> Direction {
        self.agent_dir
    }

    pub fn carrying_key(&self) -> bool {
        self.carrying_key
    }

    pub fn divider_col(&self) -> usize {
        self.divider_col
    }

    pub fn door_locked(&self) -> bool {
        matches!(
            self.grid.door(),
            Some((_, TileKind::Door { locked: true, .. }))
        )
    }

    /// Cell directly in front of the agent.
    pub fn front(&self) -> Option<Position> {
        self.agent_pos
            .offset(self.agent_dir)
            .filter(|&p| self.grid.contains(p))
    }

    /// Replaces the PRNG stream without touching the layout.
    pub fn reseed_rng(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Hash over everything the agent can change: tiles, position and
    /// inventory. Facing direction is excluded, so a pure rotation leaves it
    /// unchanged.
    pub fn state_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.grid.hash(&mut h);
        self.agent_pos.hash(&mut h);
        self.carrying_key.hash(&mut h);
        h.finish()
    }

    /// Applies one action in place.
    pub fn apply(&mut self, action: Action, rules: RuleOverrides) -> StepOutcome {
        let mut out = StepOutcome::default();
        let front = self.front();
        let ahead = front.map(|p| self.grid.get(p));
        match action {
            Action::TurnLeft => self.agent_dir = self.agent_dir.left(),
            Action::TurnRight => self.agent_dir = self.agent_dir.right(),
            Action::Forward => {
                if let (Some(p), Some(tile)) = (front, ahead) {
                    if tile.is_walkable() {
                        self.agent_pos = p;
                        out.progress = true;
                        out.reached_goal = tile == TileKind::Goal;
                        out.trigger_activated = matches!(tile, TileKind::Trigger { .. });
                    }
                }
            }
            Action::Pickup => {
                if let (Some(p), Some(TileKind::Key)) = (front, ahead) {
                    if !self.carrying_key {
                        self.grid.set(p, TileKind::Floor);
                        self.carrying_key = true;
                        out.progress = true;
                    }
                }
            }
            Action::Drop => {
                if let (Some(p), Some(TileKind::Floor)) = (front, ahead) {
                    if self.carrying_key {
                        self.grid.set(p, TileKind::Key);
                        self.carrying_key = false;
                        out.progress = true;
                    }
                }
            }
            Action::Toggle => {
                if let (Some(p), Some(TileKind::Door { locked, open })) = (front, ahead) {
                    if locked {
                        if self.carrying_key && rules.key_enabled {
                            self.grid.set(
                                p,
                                TileKind::Door {
                                    locked: false,
                                    open: true,
                                },
                            );
                            out.progress = true;
                            out.key_unlocked_door = true;
                        }
                    } else {
                        self.grid.set(
                            p,
                            TileKind::Door {
                                locked: false,
                                open: !open,
                            },
                        );
                        out.progress = true;
                    }
                }
            }
            Action::Noop => {}
        }
        out
    }

    /// Unlocks and opens the door. Returns whether anything changed.
    pub fn unlock_door(&mut self) -> bool {
        match self.grid.door() {
            Some((p, tile))
                if tile
                    != (TileKind::Door {
                        locked: false,
                        open: true,
                    }) =>
            {
                self.grid.set(
                    p,
                    TileKind::Door {
                        locked: false,
                        open: true,
                    },
                );
                true
            }
            _ => false,
        }
    }
}

/// Pure form of [`WorldState::apply`].
pub fn step_world(
    state: &WorldState,
    action: Action,
    rules: RuleOverrides,
) -> (WorldState, StepOutcome) {
    let mut next = state.clone();
    let out = next.apply(action, rules);
    (next, out)
}

/// Fixed agent start: top-left interior cell, facing East.
pub const START: Position = Position::new(1, 1);

/// Deterministic DoorKey layout for `(seed, size)`.
pub fn generate_layout(seed: u64, size: usize) -> Result<WorldState, GridError> {
    if size < MIN_SIZE {
        return Err(GridError::InvalidSize(size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = Grid::walled(size);
    let last = size - 2;

    let divider_col = rng.gen_range(2..=(size as u32 - 3)) as usize;
    for y in 1..=last {
        grid.set(Position::new(divider_col, y), TileKind::Wall);
    }

    let left: Vec<Position> = (1..=last)
        .flat_map(|y| (1..divider_col).map(move |x| Position::new(x, y)))
        .collect();

    // The key is an obstacle: it must not cut the start side in two, or a
    // policy that ignores it could be walled off from the door or trigger.
    let (door_row, key_candidates) = loop {
        let door_row = rng.gen_range(1..=last as u32) as usize;
        let door_front = Position::new(divider_col - 1, door_row);
        let candidates: Vec<Position> = left
            .iter()
            .copied()
            .filter(|&p| p != START && p != door_front)
            .filter(|&p| region_connected_without(&left, p))
            .collect();
        if !candidates.is_empty() {
            break (door_row, candidates);
        }
    };
    let key = key_candidates[rng.gen_range(0..key_candidates.len() as u32) as usize];

    grid.set(
        Position::new(divider_col, door_row),
        TileKind::Door {
            locked: true,
            open: false,
        },
    );
    grid.set(key, TileKind::Key);
    grid.set(Position::new(last, last), TileKind::Goal);

    Ok(WorldState {
        grid,
        agent_pos: START,
        agent_dir: Direction::East,
        carrying_key: false,
        divider_col,
        rng,
    })
}

fn region_connected_without(region: &[Position], removed: Position) -> bool {
    let Some(&start) = region.iter().find(|&&p| p != removed) else {
        return true;
    };
    let inside = |p: Position| p != removed && region.contains(&p);
    let mut seen = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for d in Direction::ALL {
            if let Some(n) = p.offset(d) {
                if inside(n) && !seen.contains(&n) {
                    seen.push(n);
                    queue.push_back(n);
                }
            }
        }
    }
    seen.len() == region.len() - 1
}

/// Cells eligible for the trigger tile: floor on the start side of the
/// divider, not under the agent.
pub fn trigger_candidates(world: &WorldState) -> Vec<Position> {
    world
        .grid
        .positions()
        .filter(|&p| p.x < world.divider_col)
        .filter(|&p| world.grid.get(p) == TileKind::Floor && p != world.agent_pos)
        .collect()
}

/// Draws the trigger cell from the world's PRNG stream. Does not modify the
/// grid.
pub fn place_trigger(world: &mut WorldState) -> Result<Position, GridError> {
    let candidates = trigger_candidates(world);
    if candidates.is_empty() {
        return Err(GridError::Placement);
    }
    let i = world.rng.gen_range(0..candidates.len() as u32) as usize;
    Ok(candidates[i])
}

fn agent_glyph(dir: Direction) -> char {
    match dir {
        Direction::East => '>',
        Direction::South => 'v',
        Direction::West => '<',
        Direction::North => '^',
    }
}

/// Rows of the text rendering, top to bottom.
pub fn render_rows(state: &WorldState) -> Vec<String> {
    (0..state.size())
        .map(|y| {
            (0..state.size())
                .map(|x| {
                    let p = Position::new(x, y);
                    if p == state.agent_pos {
                        agent_glyph(state.agent_dir)
                    } else {
                        state.grid.get(p).glyph()
                    }
                })
                .collect()
        })
        .collect()
}

/// One character per cell, one line per row, each line newline-terminated.
pub fn render_text(state: &WorldState) -> String {
    let mut out = String::with_capacity(state.size() * (state.size() + 1));
    for row in render_rows(state) {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(world: &WorldState, pred: impl Fn(TileKind) -> bool) -> usize {
        world.grid().count(pred)
    }

    #[test]
    fn layout_has_one_of_each_object() {
        let w = generate_layout(7, 6).unwrap();
        assert_eq!(w.size(), 6);
        assert_eq!(
            count(&w, |t| matches!(
                t,
                TileKind::Door {
                    locked: true,
                    open: false
                }
            )),
            1
        );
        assert_eq!(count(&w, |t| t == TileKind::Key), 1);
        assert_eq!(count(&w, |t| t == TileKind::Goal), 1);
        assert_eq!(count(&w, |t| matches!(t, TileKind::Trigger { .. })), 0);
        assert!(w.agent_pos().x < w.divider_col());
        assert!(w.grid().key().unwrap().x < w.divider_col());
        assert!(w.grid().goal().unwrap().x > w.divider_col());
    }

    #[test]
    fn layout_is_deterministic() {
        assert_eq!(
            generate_layout(7, 6).unwrap(),
            generate_layout(7, 6).unwrap()
        );
        assert_eq!(
            render_text(&generate_layout(7, 6).unwrap()),
            render_text(&generate_layout(7, 6).unwrap())
        );
    }

    #[test]
    fn too_small_is_rejected() {
        assert_eq!(generate_layout(7, 4), Err(GridError::InvalidSize(4)));
        assert!(generate_layout(7, 5).is_ok());
    }

    #[test]
    fn border_and_divider_are_walls() {
        for seed in 0..50 {
            for size in [5, 6, 9, 16] {
                let w = generate_layout(seed, size).unwrap();
                let g = w.grid();
                for i in 0..size {
                    for p in [
                        Position::new(i, 0),
                        Position::new(i, size - 1),
                        Position::new(0, i),
                        Position::new(size - 1, i),
                    ] {
                        assert_eq!(g.get(p), TileKind::Wall);
                    }
                }
                let doors = (1..size - 1)
                    .filter(|&y| {
                        matches!(
                            g.get(Position::new(w.divider_col(), y)),
                            TileKind::Door { .. }
                        )
                    })
                    .count();
                assert_eq!(doors, 1);
                assert!((2..=size - 3).contains(&w.divider_col()));
                assert_eq!(w.agent_pos(), START);
                assert_eq!(w.agent_dir(), Direction::East);
            }
        }
    }

    fn world(rows: &[&str], pos: Position, dir: Direction, carrying: bool) -> WorldState {
        let grid = Grid::from_rows(rows).unwrap();
        let divider = grid.door().map(|(p, _)| p.x).unwrap_or(2);
        WorldState::from_parts(grid, pos, dir, carrying, divider, 0)
    }

    const ROOM: [&str; 6] = ["WWWWWW", "W.WK.W", "W.D..W", "W.W..W", "W.W.GW", "WWWWWW"];

    #[test]
    fn forward_into_wall_is_blocked() {
        let w = world(&ROOM, Position::new(1, 1), Direction::East, false);
        let (next, out) = step_world(&w, Action::Forward, RuleOverrides::default());
        assert_eq!(next.agent_pos(), Position::new(1, 1));
        assert!(!out.progress);
    }

    #[test]
    fn toggle_with_key_unlocks() {
        let w = world(&ROOM, Position::new(1, 2), Direction::East, true);
        let (next, out) = step_world(&w, Action::Toggle, RuleOverrides { key_enabled: true });
        assert_eq!(
            next.grid().get(Position::new(2, 2)),
            TileKind::Door {
                locked: false,
                open: true
            }
        );
        assert!(out.progress && out.key_unlocked_door);
    }

    #[test]
    fn toggle_with_disabled_key_does_nothing() {
        let w = world(&ROOM, Position::new(1, 2), Direction::East, true);
        let (next, out) = step_world(&w, Action::Toggle, RuleOverrides { key_enabled: false });
        assert_eq!(next, w);
        assert!(!out.progress);
    }

    #[test]
    fn toggle_without_key_does_nothing() {
        let w = world(&ROOM, Position::new(1, 2), Direction::East, false);
        let (next, out) = step_world(&w, Action::Toggle, RuleOverrides::default());
        assert_eq!(next, w);
        assert!(!out.progress);
    }

    #[test]
    fn pickup_and_drop() {
        let w = world(&ROOM, Position::new(4, 1), Direction::West, false);
        let (held, out) = step_world(&w, Action::Pickup, RuleOverrides::default());
        assert!(out.progress && held.carrying_key());
        assert_eq!(held.grid().key(), None);
        assert!(!render_text(&held).contains('K'));

        let (dropped, out) = step_world(&held, Action::Drop, RuleOverrides::default());
        assert!(out.progress && !dropped.carrying_key());
        assert_eq!(dropped.grid().key(), Some(Position::new(3, 1)));

        // nothing to pick up in front of a wall
        let (_, out) = step_world(&w, Action::TurnLeft, RuleOverrides::default());
        assert!(!out.progress);
    }

    #[test]
    fn entering_goal_and_trigger_is_reported() {
        let w = world(&ROOM, Position::new(4, 3), Direction::South, false);
        let (_, out) = step_world(&w, Action::Forward, RuleOverrides::default());
        assert!(out.reached_goal && out.progress);

        let mut w = world(&ROOM, Position::new(1, 3), Direction::North, false);
        w.grid_mut().set(
            Position::new(1, 2),
            TileKind::Trigger {
                color: Color::Orange,
            },
        );
        let (next, out) = step_world(&w, Action::Forward, RuleOverrides::default());
        assert!(out.trigger_activated);
        assert_eq!(next.agent_pos(), Position::new(1, 2));
    }

    #[test]
    fn four_right_turns_restore_direction() {
        for d in Direction::ALL {
            let mut e = d;
            for _ in 0..4 {
                e = e.right();
            }
            assert_eq!(e, d);
            assert_eq!(d.right().left(), d);
        }
    }

    #[test]
    fn render_shape() {
        let w = generate_layout(7, 6).unwrap();
        let text = render_text(&w);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines.iter().all(|l| l.chars().count() == 6));
        assert_eq!(lines[0], "WWWWWW");
        assert_eq!(lines[5], "WWWWWW");
        assert!(lines.iter().all(|l| l.starts_with('W') && l.ends_with('W')));
        assert_eq!(lines[1].chars().nth(1), Some('>'));
    }

    #[test]
    fn key_never_disconnects_start_side() {
        for seed in 0..300 {
            for size in [5, 6, 7] {
                let w = generate_layout(seed, size).unwrap();
                let left: Vec<Position> = w
                    .grid()
                    .positions()
                    .filter(|p| p.x >= 1 && p.x < w.divider_col() && p.y >= 1 && p.y < size - 1)
                    .collect();
                assert!(region_connected_without(&left, w.grid().key().unwrap()));
            }
        }
    }

    #[test]
    fn trigger_placement_is_eligible_and_deterministic() {
        for seed in 0..100 {
            let mut w = generate_layout(seed, 6).unwrap();
            let mut copy = w.clone();
            let p = place_trigger(&mut w).unwrap();
            assert_eq!(place_trigger(&mut copy).unwrap(), p);
            assert_eq!(w.grid().get(p), TileKind::Floor);
            assert_ne!(p, w.agent_pos());
            assert!(p.x < w.divider_col());
        }
    }

    #[test]
    fn from_rows_round_trips_rendering() {
        let w = generate_layout(3, 8).unwrap();
        let rows = render_rows(&w);
        let g = Grid::from_rows(&rows).unwrap();
        assert_eq!(&g, w.grid());
    }
}
