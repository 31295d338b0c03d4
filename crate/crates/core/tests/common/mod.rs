//! Oracles shared by the integration tests. They drive the base world model
//! directly and never call into the agents or the planners.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use abidegym::{
    step_world, Action, Direction, Grid, Position, RuleOverrides, TileKind, WorldState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Key = (Grid, Position, Direction, bool);

fn key_of(w: &WorldState) -> Key {
    (
        w.grid().clone(),
        w.agent_pos(),
        w.agent_dir(),
        w.carrying_key(),
    )
}

/// Fewest actions, over all seven, until `done` holds for a step outcome
/// and the resulting world. Exhaustive BFS over world states.
pub fn shortest_actions(
    start: &WorldState,
    rules: RuleOverrides,
    done: impl Fn(&WorldState, &abidegym::StepOutcome) -> bool,
) -> Option<u64> {
    let mut seen: HashSet<Key> = HashSet::from([key_of(start)]);
    let mut queue = VecDeque::from([(start.clone(), 0u64)]);
    while let Some((w, d)) = queue.pop_front() {
        for a in Action::ALL {
            let (next, out) = step_world(&w, a, rules);
            if done(&next, &out) {
                return Some(d + 1);
            }
            if seen.insert(key_of(&next)) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Shortest solve length of the unperturbed task.
pub fn shortest_solve(start: &WorldState) -> Option<u64> {
    shortest_actions(start, RuleOverrides { key_enabled: true }, |_, o| {
        o.reached_goal
    })
}

/// Shortest number of actions until the agent stands on `cell`, with the key
/// disabled.
pub fn shortest_to_cell(start: &WorldState, cell: Position) -> Option<u64> {
    if start.agent_pos() == cell {
        return Some(0);
    }
    shortest_actions(start, RuleOverrides { key_enabled: false }, |w, _| {
        w.agent_pos() == cell
    })
}

/// Column of the door (the dividing wall), found by scanning the grid.
pub fn door_column(grid: &Grid) -> usize {
    (0..grid.size())
        .flat_map(|y| (0..grid.size()).map(move |x| Position::new(x, y)))
        .find(|&p| matches!(grid.get(p), TileKind::Door { .. }))
        .expect("layout has a door")
        .x
}

/// Cells a trigger may occupy: plain floor strictly left of the door
/// column, not under the agent.
pub fn eligible_trigger_cells(w: &WorldState) -> HashSet<Position> {
    let g = w.grid();
    let col = door_column(g);
    let mut cells = HashSet::new();
    for y in 0..g.size() {
        for x in 0..col {
            let p = Position::new(x, y);
            if g.get(p) == TileKind::Floor && p != w.agent_pos() {
                cells.insert(p);
            }
        }
    }
    cells
}

pub fn random_actions(seed: u64, n: usize) -> Vec<Action> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Action::ALL[rng.gen_range(0..Action::ALL.len())])
        .collect()
}

/// Success reward computed from scratch, in the usual DoorKey form
/// `1 - 0.9 * (step_count / max_steps)`.
pub fn expected_reward(t: u64, factor: u64, size: usize) -> f64 {
    let max_steps = (factor * (size * size) as u64) as f64;
    1.0 - 0.9 * (t as f64 / max_steps)
}
