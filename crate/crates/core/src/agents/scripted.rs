//! Hand-written reference policies: random, key strategy, trigger strategy
//! and the hybrid that switches between them on the perturbation flag.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::planner::{bfs_plan, plan_key_route, plan_onto_with_pickup, Pose, Reach, Unreachable};
use super::Observation;
use crate::grid::{Action, TileKind};

/// Uniform over all seven actions.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn act(&mut self, _obs: &Observation) -> Action {
        let i = self.rng.gen_range(0..Action::COUNT as u32);
        Action::ALL[i as usize]
    }
}

/// Queue of planned actions, invalidated whenever the layout changes.
#[derive(Debug, Clone, Default)]
struct PlanQueue {
    actions: VecDeque<Action>,
    layout: Option<u64>,
    /// The last plan was unreachable; wait until the layout changes.
    stalled: bool,
}

impl PlanQueue {
    fn flush(&mut self) {
        self.actions.clear();
        self.layout = None;
        self.stalled = false;
    }

    /// Next queued action if the plan is still current.
    fn next(&mut self, obs: &Observation) -> Option<Action> {
        if self.layout != Some(obs.layout_hash()) {
            self.flush();
        }
        if self.stalled {
            return Some(Action::Noop);
        }
        self.actions.pop_front()
    }

    fn replace(&mut self, obs: &Observation, plan: Result<Vec<Action>, Unreachable>) -> Action {
        self.layout = Some(obs.layout_hash());
        self.stalled = plan.is_err();
        self.actions = plan.unwrap_or_default().into();
        self.actions.pop_front().unwrap_or(Action::Noop)
    }
}

fn pose(obs: &Observation) -> Pose {
    Pose::new(obs.env_state.agent_pos, obs.env_state.agent_dir)
}

/// Key strategy: key, pickup, door, toggle, goal, along an optimal route.
/// It never looks at the trigger, so once the key stops working it keeps
/// toggling the locked door.
#[derive(Debug, Clone, Default)]
pub struct KeyPlanner {
    queue: PlanQueue,
    expect_unlock: bool,
}

impl KeyPlanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn flush(&mut self) {
        self.queue.flush();
        self.expect_unlock = false;
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        if std::mem::take(&mut self.expect_unlock) && obs.env_state.door_locked {
            // the key did not work; still facing the door, so try again
            self.queue.actions.push_front(Action::Toggle);
        }
        let action = match self.queue.next(obs) {
            Some(a) => a,
            None => self.queue.replace(
                obs,
                plan_key_route(&obs.grid, pose(obs), obs.env_state.has_key),
            ),
        };
        if action == Action::Toggle && obs.env_state.door_locked {
            self.expect_unlock = true;
        }
        action
    }
}

/// Route used once the perturbation is active: onto the trigger while the
/// door is locked, then onto the goal. With `pickup` set the key may be
/// picked up when that shortens the route; otherwise it is an obstacle.
#[derive(Debug, Clone, Default)]
struct TriggerRoute {
    queue: PlanQueue,
    pickup: bool,
}

impl TriggerRoute {
    fn act(&mut self, obs: &Observation) -> Action {
        if let Some(a) = self.queue.next(obs) {
            return a;
        }
        let target = if obs.env_state.door_locked {
            obs.grid.trigger()
        } else {
            obs.grid.goal()
        };
        let plan = target.ok_or(Unreachable).and_then(|t| {
            if self.pickup {
                plan_onto_with_pickup(&obs.grid, pose(obs), t, obs.env_state.has_key)
            } else {
                bfs_plan(&obs.grid, pose(obs), t, Reach::Onto, TileKind::is_walkable)
            }
        });
        self.queue.replace(obs, plan)
    }
}

/// Trigger strategy: idles until the perturbation fires, then takes the
/// trigger route. Never touches the key.
#[derive(Debug, Clone, Default)]
pub struct TriggerPlanner {
    route: TriggerRoute,
}

impl TriggerPlanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        if obs.env_state.is_perturbed() {
            self.route.act(obs)
        } else {
            Action::Noop
        }
    }
}

/// Key strategy while the perturbation flag is 0, trigger route once it is
/// 1. Switching flushes every queued plan.
#[derive(Debug, Clone)]
pub struct HybridPlanner {
    key: KeyPlanner,
    route: TriggerRoute,
    perturbed: bool,
}

impl Default for HybridPlanner {
    fn default() -> Self {
        Self {
            key: KeyPlanner::new(),
            route: TriggerRoute {
                queue: PlanQueue::default(),
                pickup: true,
            },
            perturbed: false,
        }
    }
}

impl HybridPlanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        let perturbed = obs.env_state.is_perturbed();
        if perturbed != self.perturbed {
            self.perturbed = perturbed;
            self.key.flush();
            self.route.queue.flush();
        }
        if perturbed {
            self.route.act(obs)
        } else {
            self.key.act(obs)
        }
    }

    /// Number of actions currently queued (for tests of the flush rule).
    pub fn queued(&self) -> usize {
        self.key.queue.actions.len() + self.route.queue.actions.len()
    }
}
