//! Episode runner, scenario suites and trace replay checks.

pub mod metrics;
pub mod trace;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentKind, AgentPolicy, Observation, QLearner, QTable};
use crate::config::{ConfigError, DynamicsConfig};
use crate::dynamics::{Env, EnvState, EventKind};
use crate::grid::{render_rows, Action};

pub use metrics::{adaptation_latency, classify_strategy, EpisodeSummary, Metrics, StrategyLabel};
pub use trace::{
    read_trace, write_trace, EpisodeTrace, TraceError, TraceFooter, TraceHeader, TraceStep,
    SCHEMA_VERSION,
};

/// How an episode starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The agent acts from the first step.
    Natural,
    /// `timeout_threshold` forced `Noop`s before the agent takes over, so
    /// the perturbation fires at exactly that time step.
    ForcedPerturbation,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Natural, Scenario::ForcedPerturbation];

    pub fn noop_prefix(self, config: &DynamicsConfig) -> u32 {
        match self {
            Scenario::Natural => 0,
            Scenario::ForcedPerturbation => config.timeout_threshold,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Natural => "natural",
            Scenario::ForcedPerturbation => "forced_perturbation",
        })
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("agent list is empty")]
    NoAgents,
    #[error("seed list is empty")]
    NoSeeds,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn record(env: &mut Env, action: Action, steps: &mut Vec<TraceStep>) -> bool {
    let t = env.step(action).expect("runner never steps a finished env");
    steps.push(TraceStep {
        time_step: t.observation.time_step,
        action,
        env_state: t.observation,
        reward: t.reward,
        events: t.events,
        grid: render_rows(env.world()),
    });
    t.terminated || t.truncated
}

/// Runs one episode to termination or truncation (or until a scripted
/// action list runs out) and records every step.
pub fn run_episode(
    config: &DynamicsConfig,
    agent: &mut AgentPolicy,
    seed: u64,
    scenario: Scenario,
) -> Result<EpisodeTrace, ConfigError> {
    let (mut env, initial_state) = Env::reset(config.clone(), seed)?;
    let header = TraceHeader {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        seed,
        agent: agent.kind(),
        scenario,
        initial_state,
        initial_grid: render_rows(env.world()),
    };
    let mut steps = Vec::new();
    let mut done = false;
    for _ in 0..scenario.noop_prefix(config) {
        done = record(&mut env, Action::Noop, &mut steps);
        if done {
            break;
        }
    }
    while !done && !agent.exhausted() {
        let action = agent.act(&Observation::from_env(&env));
        done = record(&mut env, action, &mut steps);
    }
    let last_has = |kind: EventKind| {
        steps
            .last()
            .is_some_and(|s| s.events.iter().any(|e| e.kind == kind))
    };
    let footer = TraceFooter {
        terminated: last_has(EventKind::GoalReached),
        truncated: last_has(EventKind::Truncated),
        final_state: env.extended(),
    };
    Ok(EpisodeTrace {
        header,
        steps,
        footer,
    })
}

/// Plays a fixed action list (stopping early if the episode ends).
pub fn run_actions(
    config: &DynamicsConfig,
    seed: u64,
    actions: &[Action],
) -> Result<EpisodeTrace, ConfigError> {
    let mut agent = AgentPolicy::from_actions(actions.to_vec());
    run_episode(config, &mut agent, seed, Scenario::Natural)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayMismatch {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {time_step}: recorded state differs from replay")]
    State {
        time_step: u64,
        recorded: Box<EnvState>,
        replayed: Box<EnvState>,
    },
    #[error("step {time_step}: recorded reward or events differ from replay")]
    Outcome { time_step: u64 },
    #[error("replay ended at step {0} but the trace continues")]
    EndedEarly(u64),
    #[error("final state differs from the footer")]
    Footer,
}

/// Re-simulates a trace from its header and checks every recorded state.
pub fn verify_replay(trace: &EpisodeTrace) -> Result<(), ReplayMismatch> {
    let (mut env, initial) = Env::reset(trace.header.config.clone(), trace.header.seed)?;
    if initial != trace.header.initial_state {
        return Err(ReplayMismatch::State {
            time_step: 0,
            recorded: Box::new(trace.header.initial_state.clone()),
            replayed: Box::new(initial),
        });
    }
    for step in &trace.steps {
        let t = env
            .step(step.action)
            .map_err(|_| ReplayMismatch::EndedEarly(step.time_step))?;
        if t.observation != step.env_state {
            return Err(ReplayMismatch::State {
                time_step: step.time_step,
                recorded: Box::new(step.env_state.clone()),
                replayed: Box::new(t.observation),
            });
        }
        if t.reward != step.reward || t.events != step.events {
            return Err(ReplayMismatch::Outcome {
                time_step: step.time_step,
            });
        }
    }
    if env.extended() != trace.footer.final_state {
        return Err(ReplayMismatch::Footer);
    }
    Ok(())
}

/// An agent entry in a suite. Learned agents carry their table.
#[derive(Debug, Clone)]
pub enum AgentSpec {
    Scripted(AgentKind),
    QGreedy(Arc<QTable<f64>>),
}

impl AgentSpec {
    pub fn kind(&self) -> AgentKind {
        match self {
            AgentSpec::Scripted(k) => *k,
            AgentSpec::QGreedy(_) => AgentKind::QLearner,
        }
    }

    /// A fresh policy for one episode, seeded by the episode seed.
    pub fn instantiate(&self, seed: u64) -> AgentPolicy {
        match self {
            AgentSpec::Scripted(k) => AgentPolicy::scripted(*k, seed)
                .unwrap_or_else(|| AgentPolicy::from_actions(Vec::new())),
            AgentSpec::QGreedy(t) => AgentPolicy::QLearner(QLearner::greedy((**t).clone(), seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub agent: AgentKind,
    pub overall: Metrics,
    pub natural: Metrics,
    pub forced_perturbation: Metrics,
}

/// Machine-readable result of [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: DynamicsConfig,
    pub seeds: Vec<u64>,
    pub agents: Vec<AgentReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn agent(&self, kind: AgentKind) -> Option<&AgentReport> {
        self.agents.iter().find(|a| a.agent == kind)
    }
}

/// One (agent, seed, scenario) cell of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCell {
    pub agent: usize,
    pub scenario: Scenario,
    pub summary: EpisodeSummary,
}

/// Runs every (agent, seed) pair under both scenarios, in parallel. Results
/// are returned in (agent, seed, scenario) order.
pub fn run_cells(
    config: &DynamicsConfig,
    agents: &[AgentSpec],
    seeds: &[u64],
) -> Result<Vec<SuiteCell>, SuiteError> {
    if agents.is_empty() {
        return Err(SuiteError::NoAgents);
    }
    if seeds.is_empty() {
        return Err(SuiteError::NoSeeds);
    }
    config.validate()?;
    let jobs: Vec<(usize, u64, Scenario)> = (0..agents.len())
        .flat_map(|a| {
            seeds
                .iter()
                .flat_map(move |&s| Scenario::ALL.map(|sc| (a, s, sc)))
        })
        .collect();
    jobs.into_par_iter()
        .map(|(a, seed, scenario)| {
            let mut policy = agents[a].instantiate(seed);
            let trace = run_episode(config, &mut policy, seed, scenario)?;
            Ok(SuiteCell {
                agent: a,
                scenario,
                summary: EpisodeSummary::from_trace(&trace),
            })
        })
        .collect()
}

pub fn run_suite(
    config: &DynamicsConfig,
    agents: &[AgentSpec],
    seeds: &[u64],
) -> Result<SuiteReport, SuiteError> {
    let cells = run_cells(config, agents, seeds)?;
    let pick = |a: usize, scenario: Option<Scenario>| -> Vec<EpisodeSummary> {
        cells
            .iter()
            .filter(|c| c.agent == a && scenario.is_none_or(|s| c.scenario == s))
            .map(|c| c.summary.clone())
            .collect()
    };
    let agents = agents
        .iter()
        .enumerate()
        .map(|(a, spec)| AgentReport {
            agent: spec.kind(),
            overall: Metrics::aggregate(&pick(a, None)),
            natural: Metrics::aggregate(&pick(a, Some(Scenario::Natural))),
            forced_perturbation: Metrics::aggregate(&pick(a, Some(Scenario::ForcedPerturbation))),
        })
        .collect();
    Ok(SuiteReport {
        config: config.clone(),
        seeds: seeds.to_vec(),
        agents,
    })
}
