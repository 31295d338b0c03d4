//! Agent-aware dynamic DoorKey gridworld.
//!
//! A DoorKey task (fetch the key, unlock the door, reach the goal) whose
//! rules change mid-episode when the agent stops making progress: after a
//! warning phase the key stops working and a trigger tile appears that opens
//! the door instead; after a longer stall the whole grid is regenerated
//! larger.
//!
//! * [`grid`]: static world model, layout generation, kinematics, rendering
//! * [`dynamics`]: the inactivity monitor, perturbation and resizing
//! * [`agents`]: reference planners and a tabular Q-learner
//! * [`harness`]: episode runner, suites, metrics and trace files
//! * [`cli`]: the `abidegym` command line
//!
//! ```
//! use abidegym::{Action, DynamicsConfig, Env};
//!
//! let (mut env, state) = Env::reset(DynamicsConfig::default(), 1).unwrap();
//! assert_eq!(state.perturbation, 0.0);
//! for _ in 0..10 {
//!     env.step(Action::Noop).unwrap();
//! }
//! assert_eq!(env.env_state().perturbation, 1.0);
//! ```

pub mod agents;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod grid;
pub mod harness;

pub use agents::{AgentKind, AgentPolicy, Observation};
pub use config::{ConfigError, ConfigOverrides, DynamicsConfig};
pub use dynamics::{
    compute_reward, DynamicEvent, Env, EnvState, EventKind, ExtendedState, Phase, StepError,
    Transition, UnlockCause,
};
pub use grid::{
    generate_layout, place_trigger, render_text, step_world, Action, Color, Direction, Grid,
    GridError, Position, RuleOverrides, StepOutcome, TileKind, WorldState,
};
pub use harness::{run_episode, run_suite, EpisodeTrace, Metrics, Scenario, StrategyLabel};

/// Q-values in double precision; what the harness and CLI use.
pub type QTable = agents::qlearn::QTable<f64>;
pub type QConfig = agents::qlearn::QConfig<f64>;
pub type QLearner = agents::qlearn::QLearner<f64>;

/// Single-precision variants.
pub type QTableF32 = agents::qlearn::QTable<f32>;
pub type QConfigF32 = agents::qlearn::QConfig<f32>;
pub type QLearnerF32 = agents::qlearn::QLearner<f32>;
