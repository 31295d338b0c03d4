//! Reference policies spanning the strategy spectrum, plus a tabular
//! Q-learner.
//!
//! All agents see the full grid. The observation record alone carries no
//! layout geometry, and every planner needs it.

pub mod planner;
pub mod qlearn;
pub mod scripted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Env, EnvState, ExtendedState};
use crate::grid::{Action, Grid};

pub use planner::{bfs_plan, plan_key_route, plan_onto_with_pickup, Pose, Reach, Unreachable};
pub use qlearn::{q_state_key, q_update, QConfig, QLearner, QStateKey, QTable, QTableError};
pub use scripted::{HybridPlanner, KeyPlanner, RandomAgent, TriggerPlanner};

/// What an agent sees each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub env_state: EnvState,
    pub grid: Grid,
    pub extended: ExtendedState,
}

impl Observation {
    pub fn from_env(env: &Env) -> Self {
        Self {
            env_state: env.env_state(),
            grid: env.world().grid().clone(),
            extended: env.extended(),
        }
    }

    pub fn layout_hash(&self) -> u64 {
        self.grid.layout_hash()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    KeyPlanner,
    TriggerPlanner,
    Hybrid,
    QLearner,
    /// Replays a fixed action list; used for recorded or fuzzed runs.
    Scripted,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::KeyPlanner => "key_planner",
            AgentKind::TriggerPlanner => "trigger_planner",
            AgentKind::Hybrid => "hybrid",
            AgentKind::QLearner => "q_learner",
            AgentKind::Scripted => "scripted",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(
            match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
                "random" => AgentKind::Random,
                "key" | "key_planner" => AgentKind::KeyPlanner,
                "trigger" | "trigger_planner" => AgentKind::TriggerPlanner,
                "hybrid" => AgentKind::Hybrid,
                "q" | "qlearner" | "q_learner" => AgentKind::QLearner,
                "scripted" => AgentKind::Scripted,
                other => return Err(format!("unknown agent {other:?}")),
            },
        )
    }
}

/// A policy instance, one per episode.
#[derive(Debug, Clone)]
pub enum AgentPolicy {
    Random(RandomAgent),
    KeyPlanner(KeyPlanner),
    TriggerPlanner(TriggerPlanner),
    Hybrid(HybridPlanner),
    QLearner(QLearner<f64>),
    Scripted(std::vec::IntoIter<Action>),
}

impl AgentPolicy {
    /// Builds a hand-written policy. `seed` only matters for `Random`.
    /// Returns `None` for kinds that need more than a seed.
    pub fn scripted(kind: AgentKind, seed: u64) -> Option<Self> {
        Some(match kind {
            AgentKind::Random => AgentPolicy::Random(RandomAgent::new(seed)),
            AgentKind::KeyPlanner => AgentPolicy::KeyPlanner(KeyPlanner::new()),
            AgentKind::TriggerPlanner => AgentPolicy::TriggerPlanner(TriggerPlanner::new()),
            AgentKind::Hybrid => AgentPolicy::Hybrid(HybridPlanner::new()),
            AgentKind::QLearner | AgentKind::Scripted => return None,
        })
    }

    /// Plays `actions` in order, then `Noop`.
    pub fn from_actions(actions: Vec<Action>) -> Self {
        AgentPolicy::Scripted(actions.into_iter())
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            AgentPolicy::Random(_) => AgentKind::Random,
            AgentPolicy::KeyPlanner(_) => AgentKind::KeyPlanner,
            AgentPolicy::TriggerPlanner(_) => AgentKind::TriggerPlanner,
            AgentPolicy::Hybrid(_) => AgentKind::Hybrid,
            AgentPolicy::QLearner(_) => AgentKind::QLearner,
            AgentPolicy::Scripted(_) => AgentKind::Scripted,
        }
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        match self {
            AgentPolicy::Random(a) => a.act(obs),
            AgentPolicy::KeyPlanner(a) => a.act(obs),
            AgentPolicy::TriggerPlanner(a) => a.act(obs),
            AgentPolicy::Hybrid(a) => a.act(obs),
            AgentPolicy::QLearner(a) => a.act(obs),
            AgentPolicy::Scripted(it) => it.next().unwrap_or(Action::Noop),
        }
    }

    /// Whether a scripted action list has run out.
    pub fn exhausted(&self) -> bool {
        matches!(self, AgentPolicy::Scripted(it) if it.len() == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DynamicsConfig;
    use crate::dynamics::EventKind;

    fn run(
        policy: &mut AgentPolicy,
        config: DynamicsConfig,
        seed: u64,
        prefix: u32,
    ) -> (Vec<Action>, Vec<crate::dynamics::Transition>) {
        let (mut env, _) = Env::reset(config, seed).unwrap();
        let mut actions = Vec::new();
        let mut transitions = Vec::new();
        for _ in 0..prefix {
            transitions.push(env.step(Action::Noop).unwrap());
        }
        while !env.is_finished() {
            let a = policy.act(&Observation::from_env(&env));
            actions.push(a);
            transitions.push(env.step(a).unwrap());
        }
        (actions, transitions)
    }

    #[test]
    fn key_planner_solves_unperturbed() {
        for seed in 0..20 {
            let mut p = AgentPolicy::scripted(AgentKind::KeyPlanner, 0).unwrap();
            let (_, ts) = run(&mut p, DynamicsConfig::default(), seed, 0);
            let last = ts.last().unwrap();
            assert!(last.terminated, "seed {seed}");
            assert!(ts.iter().all(|t| t.observation.perturbation == 0.0));
        }
    }

    #[test]
    fn key_planner_stalls_when_perturbed() {
        let mut p = AgentPolicy::scripted(AgentKind::KeyPlanner, 0).unwrap();
        let (actions, ts) = run(&mut p, DynamicsConfig::default(), 1, 10);
        assert!(ts.last().unwrap().truncated);
        let tail = &actions[actions.len() - 5..];
        assert!(tail
            .iter()
            .all(|a| matches!(a, Action::Toggle | Action::Noop)));
    }

    #[test]
    fn hybrid_matches_key_planner_when_unperturbed() {
        for seed in 0..20 {
            let mut k = AgentPolicy::scripted(AgentKind::KeyPlanner, 0).unwrap();
            let mut h = AgentPolicy::scripted(AgentKind::Hybrid, 0).unwrap();
            let (ka, _) = run(&mut k, DynamicsConfig::default(), seed, 0);
            let (ha, _) = run(&mut h, DynamicsConfig::default(), seed, 0);
            assert_eq!(ka, ha);
        }
    }

    #[test]
    fn trigger_planner_waits_then_solves() {
        let mut p = AgentPolicy::scripted(AgentKind::TriggerPlanner, 0).unwrap();
        let (actions, ts) = run(&mut p, DynamicsConfig::default(), 4, 0);
        assert!(actions[..10].iter().all(|&a| a == Action::Noop));
        assert!(!actions.contains(&Action::Pickup));
        assert!(ts.last().unwrap().terminated);
        assert!(ts
            .iter()
            .flat_map(|t| &t.events)
            .any(|e| e.kind == EventKind::TriggerActivated));
    }

    #[test]
    fn hybrid_flushes_plan_on_flag_flip() {
        let (mut env, _) = Env::reset(DynamicsConfig::default(), 2).unwrap();
        let mut h = HybridPlanner::new();
        h.act(&Observation::from_env(&env));
        assert!(h.queued() > 0);
        env.apply_perturbation();
        let obs = Observation::from_env(&env);
        let a = h.act(&obs);
        // the queue now holds only the trigger route
        let expected = bfs_plan(
            &obs.grid,
            Pose::new(obs.env_state.agent_pos, obs.env_state.agent_dir),
            obs.grid.trigger().unwrap(),
            Reach::Onto,
            crate::grid::TileKind::is_walkable,
        )
        .unwrap();
        assert_eq!(a, expected[0]);
        assert_eq!(h.queued(), expected.len() - 1);
    }

    #[test]
    fn agent_names_parse() {
        for k in [
            AgentKind::Random,
            AgentKind::KeyPlanner,
            AgentKind::TriggerPlanner,
            AgentKind::Hybrid,
            AgentKind::QLearner,
        ] {
            assert_eq!(k.name().parse::<AgentKind>(), Ok(k));
        }
        assert_eq!("key".parse::<AgentKind>(), Ok(AgentKind::KeyPlanner));
        assert!("nope".parse::<AgentKind>().is_err());
    }
}
