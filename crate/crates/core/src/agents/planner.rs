//! Breadth-first planning over agent poses.
//!
//! Every action (turn or forward, pickup, toggle) costs one step, so plain
//! BFS over `(position, direction, ...)` states yields shortest action
//! sequences. Successors are expanded in a fixed order, which makes every
//! plan deterministic.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use thiserror::Error;

use crate::grid::{Action, Direction, Grid, Position, TileKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("target is unreachable")]
pub struct Unreachable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pose {
    pub pos: Position,
    pub dir: Direction,
}

impl Pose {
    pub fn new(pos: Position, dir: Direction) -> Self {
        Self { pos, dir }
    }

    pub fn front(self) -> Option<Position> {
        self.pos.offset(self.dir)
    }
}

/// Where a navigation plan should leave the agent relative to its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reach {
    /// Standing on the target cell.
    Onto,
    /// On a neighbouring cell, facing the target.
    Facing,
}

/// Shortest-path search over an implicit graph whose edges are labelled with
/// actions. `expand` pushes `(action, successor)` pairs in priority order.
pub(crate) fn search<S: Copy + Eq + Hash>(
    start: S,
    mut expand: impl FnMut(S, &mut Vec<(Action, S)>),
    is_goal: impl Fn(S) -> bool,
) -> Option<Vec<Action>> {
    if is_goal(start) {
        return Some(Vec::new());
    }
    let mut parent: HashMap<S, (S, Action)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut next = Vec::with_capacity(4);
    while let Some(state) = queue.pop_front() {
        next.clear();
        expand(state, &mut next);
        for &(action, succ) in &next {
            if succ == start || parent.contains_key(&succ) {
                continue;
            }
            parent.insert(succ, (state, action));
            if is_goal(succ) {
                let mut plan = vec![action];
                let mut cur = state;
                while cur != start {
                    let (prev, a) = parent[&cur];
                    plan.push(a);
                    cur = prev;
                }
                plan.reverse();
                return Some(plan);
            }
            queue.push_back(succ);
        }
    }
    None
}

/// Forward, then right turn, then left turn.
fn push_moves(pose: Pose, walkable: impl Fn(Position) -> bool, out: &mut Vec<(Action, Pose)>) {
    if let Some(ahead) = pose.front() {
        if walkable(ahead) {
            out.push((Action::Forward, Pose::new(ahead, pose.dir)));
        }
    }
    out.push((Action::TurnRight, Pose::new(pose.pos, pose.dir.right())));
    out.push((Action::TurnLeft, Pose::new(pose.pos, pose.dir.left())));
}

/// Shortest turn/forward sequence from `from` to `to`.
pub fn bfs_plan(
    grid: &Grid,
    from: Pose,
    to: Position,
    reach: Reach,
    passable: impl Fn(TileKind) -> bool,
) -> Result<Vec<Action>, Unreachable> {
    let walkable = |p: Position| grid.try_get(p).is_some_and(&passable);
    search(
        from,
        |pose, out| push_moves(pose, walkable, out),
        |pose| match reach {
            Reach::Onto => pose.pos == to,
            Reach::Facing => pose.front() == Some(to),
        },
    )
    .ok_or(Unreachable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CarryState {
    pose: Pose,
    key_taken: bool,
}

/// Shortest route onto `to` when picking up the key is allowed: a key lying
/// on the straight line is cheaper to take (one action) than to walk around.
pub fn plan_onto_with_pickup(
    grid: &Grid,
    from: Pose,
    to: Position,
    has_key: bool,
) -> Result<Vec<Action>, Unreachable> {
    let key = grid.key();
    let walkable = |p: Position, s: CarryState| {
        grid.try_get(p)
            .is_some_and(|t| t.is_walkable() || (s.key_taken && Some(p) == key))
    };
    search(
        CarryState {
            pose: from,
            key_taken: has_key || key.is_none(),
        },
        |s, out| {
            let mut moves = Vec::with_capacity(3);
            push_moves(s.pose, |p| walkable(p, s), &mut moves);
            out.extend(
                moves
                    .into_iter()
                    .map(|(a, pose)| (a, CarryState { pose, ..s })),
            );
            if !s.key_taken && s.pose.front().is_some() && s.pose.front() == key {
                out.push((
                    Action::Pickup,
                    CarryState {
                        key_taken: true,
                        ..s
                    },
                ));
            }
        },
        |s| s.pose.pos == to,
    )
    .ok_or(Unreachable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct KeyTaskState {
    pose: Pose,
    key_taken: bool,
    door_open: bool,
}

/// Optimal full solution of the unperturbed task from the current state:
/// fetch the key (if needed), open the door (if needed) and walk onto the
/// goal. Assumes the key still opens the door. Trigger tiles are not part
/// of that task and are routed around.
pub fn plan_key_route(grid: &Grid, from: Pose, has_key: bool) -> Result<Vec<Action>, Unreachable> {
    let goal = grid.goal().ok_or(Unreachable)?;
    let key = grid.key();
    let (door, door_tile) = grid.door().ok_or(Unreachable)?;
    let (door_locked, door_open) = match door_tile {
        TileKind::Door { locked, open } => (locked, open),
        _ => unreachable!(),
    };

    let tile_at = |p: Position, s: KeyTaskState| -> Option<TileKind> {
        let t = grid.try_get(p)?;
        Some(if Some(p) == key && s.key_taken {
            TileKind::Floor
        } else if p == door && s.door_open {
            TileKind::Door {
                locked: false,
                open: true,
            }
        } else {
            t
        })
    };

    let start = KeyTaskState {
        pose: from,
        key_taken: has_key,
        door_open,
    };
    search(
        start,
        |s, out| {
            let mut moves = Vec::with_capacity(3);
            push_moves(
                s.pose,
                |p| {
                    tile_at(p, s)
                        .is_some_and(|t| t.is_walkable() && !matches!(t, TileKind::Trigger { .. }))
                },
                &mut moves,
            );
            out.extend(
                moves
                    .into_iter()
                    .map(|(a, pose)| (a, KeyTaskState { pose, ..s })),
            );
            let front = s.pose.front();
            if !s.key_taken && front.is_some() && front == key {
                out.push((
                    Action::Pickup,
                    KeyTaskState {
                        key_taken: true,
                        ..s
                    },
                ));
            }
            if !s.door_open && front == Some(door) && (s.key_taken || !door_locked) {
                out.push((
                    Action::Toggle,
                    KeyTaskState {
                        door_open: true,
                        ..s
                    },
                ));
            }
        },
        |s| s.pose.pos == goal,
    )
    .ok_or(Unreachable)
}
