//! The agent-aware wrapper: inactivity monitoring, the warning phase,
//! timeout perturbation (key disabled, trigger tile placed), inactivity-driven
//! resizing, reward and termination.
//!
//! Inactivity means "no progress": a step that neither moves the agent nor
//! completes a pickup, drop or toggle. The counter is compared for equality
//! against each threshold, so events fire on the step the counter reaches
//! the limit:
//!
//! * warning at `ceil(timeout_threshold / 2)`
//! * perturbation at `timeout_threshold` (once per episode)
//! * resize at `resize_threshold`, after which the counter restarts
//!
//! Once the grid is at `max_size` the counter saturates at
//! `resize_threshold`.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, DynamicsConfig};
use crate::grid::{
    self, generate_layout, Action, Color, Direction, Position, RuleOverrides, TileKind, WorldState,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("episode is over; call reset")]
    EpisodeOver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Normal,
    Warning,
    Perturbed,
}

/// The observation record exposed to agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent_pos: Position,
    pub agent_dir: Direction,
    pub door_locked: bool,
    pub has_key: bool,
    pub trigger_color: Option<Color>,
    /// Exactly 1.0 once the perturbation is active, 0.0 before.
    pub perturbation: f64,
    pub time_step: u64,
}

impl EnvState {
    pub fn is_perturbed(&self) -> bool {
        self.perturbation == 1.0
    }
}

/// [`EnvState`] plus the wrapper's bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    #[serde(flatten)]
    pub env: EnvState,
    pub steps_since_move: u32,
    pub current_size: usize,
    pub timeout_threshold: u32,
    pub phase: Phase,
    pub resize_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnlockCause {
    Key,
    Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    WarningEntered,
    PerturbationTriggered,
    Resized {
        old_size: usize,
        new_size: usize,
    },
    /// The agent stepped onto the trigger tile (fires on every entry).
    TriggerActivated,
    /// The door went from locked to unlocked.
    DoorUnlocked {
        cause: UnlockCause,
    },
    GoalReached,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DynamicEvent {
    pub time_step: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Result of one [`Env::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: EnvState,
    pub extended: ExtendedState,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub events: Vec<DynamicEvent>,
}

/// Sparse success reward: `1 - 0.9 * time_step / budget`.
pub fn compute_reward<S: Float>(time_step: u64, budget: u64) -> S {
    let frac = S::from(time_step).unwrap() / S::from(budget).unwrap();
    S::one() - S::from(0.9).unwrap() * frac
}

/// Seed for the layout generated by the `k`-th resize (SplitMix64 finaliser
/// over `seed + k * golden_gamma`). `k = 0` is the episode seed itself.
pub fn derived_seed(seed: u64, k: u32) -> u64 {
    if k == 0 {
        return seed;
    }
    let mut z = seed.wrapping_add(u64::from(k).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One episode of the dynamic DoorKey task.
#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    config: DynamicsConfig,
    seed: u64,
    world: WorldState,
    key_enabled: bool,
    phase: Phase,
    time_step: u64,
    steps_since_move: u32,
    resize_count: u32,
    finished: bool,
}

impl Env {
    pub fn reset(config: DynamicsConfig, seed: u64) -> Result<(Env, EnvState), ConfigError> {
        config.validate()?;
        let world = generate_layout(seed, config.initial_size)
            .map_err(|_| ConfigError::InitialSize(config.initial_size))?;
        let env = Env {
            config,
            seed,
            world,
            key_enabled: true,
            phase: Phase::Normal,
            time_step: 0,
            steps_since_move: 0,
            resize_count: 0,
            finished: false,
        };
        let state = env.env_state();
        Ok((env, state))
    }

    pub fn config(&self) -> &DynamicsConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn key_enabled(&self) -> bool {
        self.key_enabled
    }

    pub fn is_perturbed(&self) -> bool {
        self.phase == Phase::Perturbed
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn time_step(&self) -> u64 {
        self.time_step
    }

    pub fn current_size(&self) -> usize {
        self.world.size()
    }

    pub fn budget(&self) -> u64 {
        self.config.budget(self.current_size())
    }

    pub fn env_state(&self) -> EnvState {
        let perturbed = self.is_perturbed();
        EnvState {
            agent_pos: self.world.agent_pos(),
            agent_dir: self.world.agent_dir(),
            door_locked: self.world.door_locked(),
            has_key: self.world.carrying_key(),
            trigger_color: perturbed.then_some(self.config.trigger_color),
            perturbation: if perturbed { 1.0 } else { 0.0 },
            time_step: self.time_step,
        }
    }

    pub fn extended(&self) -> ExtendedState {
        ExtendedState {
            env: self.env_state(),
            steps_since_move: self.steps_since_move,
            current_size: self.current_size(),
            timeout_threshold: self.config.timeout_threshold,
            phase: self.phase,
            resize_count: self.resize_count,
        }
    }

    pub fn step(&mut self, action: Action) -> Result<Transition, StepError> {
        if self.finished {
            return Err(StepError::EpisodeOver);
        }
        let outcome = self.world.apply(
            action,
            RuleOverrides {
                key_enabled: self.key_enabled,
            },
        );
        self.time_step += 1;
        let now = self.time_step;
        let mut events = Vec::new();
        let mut emit = |kind| {
            events.push(DynamicEvent {
                time_step: now,
                kind,
            })
        };

        if outcome.key_unlocked_door {
            emit(EventKind::DoorUnlocked {
                cause: UnlockCause::Key,
            });
        }
        if outcome.trigger_activated {
            emit(EventKind::TriggerActivated);
            if self.activate_trigger() {
                emit(EventKind::DoorUnlocked {
                    cause: UnlockCause::Trigger,
                });
            }
        }

        if outcome.progress {
            self.steps_since_move = 0;
            if self.phase == Phase::Warning {
                self.phase = Phase::Normal;
            }
        } else {
            let cfg = &self.config;
            self.steps_since_move = (self.steps_since_move + 1).min(cfg.resize_threshold);
            let count = self.steps_since_move;
            if self.phase == Phase::Normal && count == cfg.warning_threshold() {
                self.phase = Phase::Warning;
                emit(EventKind::WarningEntered);
            }
            if count == self.config.timeout_threshold
                && self.config.perturbation_enabled
                && self.apply_perturbation()
            {
                emit(EventKind::PerturbationTriggered);
            }
            if count == self.config.resize_threshold && self.config.resize_enabled {
                let old_size = self.current_size();
                if self.apply_resize() {
                    emit(EventKind::Resized {
                        old_size,
                        new_size: self.current_size(),
                    });
                }
            }
        }

        let terminated = outcome.reached_goal;
        let truncated = !terminated && now >= self.budget();
        let reward = if terminated {
            compute_reward(now, self.budget())
        } else {
            0.0
        };
        if terminated {
            emit(EventKind::GoalReached);
        } else if truncated {
            emit(EventKind::Truncated);
        }
        self.finished = terminated || truncated;

        Ok(Transition {
            observation: self.env_state(),
            extended: self.extended(),
            reward,
            terminated,
            truncated,
            events,
        })
    }

    /// Disables the key and places the trigger tile. Returns `false` (and
    /// does nothing) if the perturbation is already active.
    pub fn apply_perturbation(&mut self) -> bool {
        if self.phase == Phase::Perturbed {
            return false;
        }
        self.key_enabled = false;
        self.install_trigger();
        self.phase = Phase::Perturbed;
        true
    }

    fn install_trigger(&mut self) {
        let cell = grid::place_trigger(&mut self.world)
            .expect("generated layouts always leave a free cell on the start side");
        self.world.grid_mut().set(
            cell,
            TileKind::Trigger {
                color: self.config.trigger_color,
            },
        );
    }

    /// Opens the door as if the trigger was stepped on. Returns whether the
    /// door was locked before.
    pub fn activate_trigger(&mut self) -> bool {
        let was_locked = self.world.door_locked();
        self.world.unlock_door();
        was_locked
    }

    /// Regenerates the world one increment larger and puts the agent back at
    /// the start. Returns `false` (and does nothing) at `max_size`.
    pub fn apply_resize(&mut self) -> bool {
        let new_size = self.current_size() + self.config.resize_increment;
        if new_size > self.config.max_size {
            return false;
        }
        self.resize_count += 1;
        self.world = generate_layout(derived_seed(self.seed, self.resize_count), new_size)
            .expect("resized layouts are larger than the validated initial size");
        self.steps_since_move = 0;
        match self.phase {
            Phase::Warning => self.phase = Phase::Normal,
            Phase::Perturbed => {
                self.key_enabled = false;
                self.install_trigger();
            }
            Phase::Normal => {}
        }
        true
    }
}
