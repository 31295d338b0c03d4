//! Tabular Q-learning over a coarse discrete state.
//!
//! The table key ignores the layout beyond the agent's pose and the task
//! flags, so the learner is a probe of how much the perturbation signal alone
//! lets it adapt, not a strong baseline. Values are generic over the float
//! type.
//!
//! Saved tables are plain text:
//!
//! ```text
//! abidegym-qtable 1
//! <x> <y> <dir> <has_key> <door_locked> <perturbed> <size> <q0> .. <q6>
//! ```
//!
//! one line per state, sorted by key, flags as `0`/`1`.

use std::collections::HashMap;
use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::Observation;
use crate::config::{ConfigError, DynamicsConfig};
use crate::dynamics::Env;
use crate::grid::Action;

pub const QTABLE_HEADER: &str = "abidegym-qtable";
pub const QTABLE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum QTableError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported q-table version {found} (expected {QTABLE_VERSION})")]
    Version { found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QStateKey {
    pub x: usize,
    pub y: usize,
    pub dir: u8,
    pub has_key: bool,
    pub door_locked: bool,
    pub perturbed: bool,
    pub size: usize,
}

pub fn q_state_key(obs: &Observation) -> QStateKey {
    let s = &obs.env_state;
    QStateKey {
        x: s.agent_pos.x,
        y: s.agent_pos.y,
        dir: s.agent_dir.index(),
        has_key: s.has_key,
        door_locked: s.door_locked,
        perturbed: s.is_perturbed(),
        size: obs.extended.current_size,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QConfig<S> {
    pub alpha: S,
    pub gamma: S,
    /// Initial exploration rate, annealed linearly to zero over training.
    pub epsilon: S,
    pub episodes: u32,
}

impl<S: Float> Default for QConfig<S> {
    fn default() -> Self {
        Self {
            alpha: S::from(0.1).unwrap(),
            gamma: S::from(0.99).unwrap(),
            epsilon: S::from(0.1).unwrap(),
            episodes: 5000,
        }
    }
}

impl<S: Float + Display> QConfig<S> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > S::zero() && self.alpha <= S::one()) {
            return Err(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(self.gamma >= S::zero() && self.gamma <= S::one()) {
            return Err(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(self.epsilon >= S::zero() && self.epsilon <= S::one()) {
            return Err(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Action values per state; unseen entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<S> {
    values: HashMap<QStateKey, [S; Action::COUNT]>,
}

impl<S: Float> Default for QTable<S> {
    fn default() -> Self {
        Self {
            values: HashMap::new(),
        }
    }
}

impl<S: Float> QTable<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, s: &QStateKey) -> [S; Action::COUNT] {
        self.values
            .get(s)
            .copied()
            .unwrap_or([S::zero(); Action::COUNT])
    }

    pub fn get(&self, s: &QStateKey, a: Action) -> S {
        self.row(s)[a.index() as usize]
    }

    pub fn set(&mut self, s: QStateKey, a: Action, v: S) {
        self.values.entry(s).or_insert([S::zero(); Action::COUNT])[a.index() as usize] = v;
    }

    pub fn max_value(&self, s: &QStateKey) -> S {
        self.row(s).into_iter().fold(S::neg_infinity(), S::max)
    }

    /// Actions tied for the highest value, in encoding order.
    pub fn greedy_actions(&self, s: &QStateKey) -> Vec<Action> {
        let row = self.row(s);
        let best = self.max_value(s);
        Action::ALL
            .into_iter()
            .filter(|a| row[a.index() as usize] == best)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QStateKey, &[S; Action::COUNT])> {
        self.values.iter()
    }
}

impl<S: Float + Display + FromStr> QTable<S> {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{QTABLE_HEADER} {QTABLE_VERSION}")?;
        let mut keys: Vec<&QStateKey> = self.values.keys().collect();
        keys.sort();
        for k in keys {
            write!(
                out,
                "{} {} {} {} {} {} {}",
                k.x,
                k.y,
                k.dir,
                u8::from(k.has_key),
                u8::from(k.door_locked),
                u8::from(k.perturbed),
                k.size
            )?;
            for v in &self.values[k] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, QTableError> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let mut parts = header.split_whitespace();
        if parts.next() != Some(QTABLE_HEADER) {
            return Err(QTableError::Parse {
                line: 1,
                message: format!("expected header {QTABLE_HEADER:?}"),
            });
        }
        let version = parts.next().unwrap_or("").to_string();
        if version != QTABLE_VERSION.to_string() {
            return Err(QTableError::Version { found: version });
        }

        let mut table = QTable::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| QTableError::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 7 + Action::COUNT {
                return Err(err(format!(
                    "expected {} fields, found {}",
                    7 + Action::COUNT,
                    fields.len()
                )));
            }
            let int = |i: usize| -> Result<usize, QTableError> {
                fields[i]
                    .parse::<usize>()
                    .map_err(|e| err(format!("field {}: {e}", i + 1)))
            };
            let flag = |i: usize| -> Result<bool, QTableError> {
                match fields[i] {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(err(format!(
                        "field {}: expected 0 or 1, got {other:?}",
                        i + 1
                    ))),
                }
            };
            let dir = int(2)?;
            if dir > 3 {
                return Err(err(format!("direction {dir} out of range")));
            }
            let key = QStateKey {
                x: int(0)?,
                y: int(1)?,
                dir: dir as u8,
                has_key: flag(3)?,
                door_locked: flag(4)?,
                perturbed: flag(5)?,
                size: int(6)?,
            };
            let mut row = [S::zero(); Action::COUNT];
            for (a, slot) in row.iter_mut().enumerate() {
                *slot = fields[7 + a]
                    .parse::<S>()
                    .map_err(|_| err(format!("bad value {:?}", fields[7 + a])))?;
            }
            table.values.insert(key, row);
        }
        Ok(table)
    }
}

/// One-step temporal-difference update. `next = None` marks a terminal
/// transition (no bootstrap).
pub fn q_update<S: Float>(
    table: &mut QTable<S>,
    s: QStateKey,
    a: Action,
    r: S,
    next: Option<&QStateKey>,
    config: &QConfig<S>,
) {
    let old = table.get(&s, a);
    let future = next.map_or(S::zero(), |n| table.max_value(n));
    let target = r + config.gamma * future;
    table.set(s, a, old + config.alpha * (target - old));
}

/// Epsilon-greedy policy over a table, breaking ties uniformly at random.
#[derive(Debug, Clone)]
pub struct QLearner<S> {
    pub table: QTable<S>,
    pub epsilon: S,
    rng: ChaCha8Rng,
}

impl<S: Float> QLearner<S> {
    pub fn new(table: QTable<S>, epsilon: S, seed: u64) -> Self {
        Self {
            table,
            epsilon,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Purely greedy (epsilon = 0).
    pub fn greedy(table: QTable<S>, seed: u64) -> Self {
        Self::new(table, S::zero(), seed)
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        self.act_on(&q_state_key(obs))
    }

    fn act_on(&mut self, s: &QStateKey) -> Action {
        let explore =
            self.epsilon > S::zero() && S::from(self.rng.gen::<f64>()).unwrap() < self.epsilon;
        if explore {
            return Action::ALL[self.rng.gen_range(0..Action::COUNT as u32) as usize];
        }
        let best = self.table.greedy_actions(s);
        best[self.rng.gen_range(0..best.len() as u32) as usize]
    }
}

/// Trains a table on a single environment seed. Each episode first idles for
/// `noop_prefix` steps (not learned from) and then lets the learner act.
/// Exploration decays linearly from `q.epsilon` to zero.
pub fn train<S: Float>(
    env_config: &DynamicsConfig,
    env_seed: u64,
    noop_prefix: u32,
    q: &QConfig<S>,
    rng_seed: u64,
) -> Result<QTable<S>, ConfigError> {
    env_config.validate()?;
    let mut learner = QLearner::new(QTable::new(), q.epsilon, rng_seed);
    let episodes = q.episodes.max(1);
    for ep in 0..q.episodes {
        let remaining = S::from(episodes - ep).unwrap() / S::from(episodes).unwrap();
        learner.epsilon = q.epsilon * remaining;

        let (mut env, _) = Env::reset(env_config.clone(), env_seed)?;
        for _ in 0..noop_prefix {
            if env.is_finished() {
                break;
            }
            env.step(Action::Noop).expect("env not finished");
        }
        let mut s = q_state_key(&Observation::from_env(&env));
        while !env.is_finished() {
            let a = learner.act_on(&s);
            let t = env.step(a).expect("env not finished");
            let next = q_state_key(&Observation::from_env(&env));
            let r = S::from(t.reward).unwrap();
            let bootstrap = (!t.terminated).then_some(&next);
            q_update(&mut learner.table, s, a, r, bootstrap, q);
            s = next;
        }
    }
    Ok(learner.table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(x: usize) -> QStateKey {
        QStateKey {
            x,
            y: 1,
            dir: 0,
            has_key: false,
            door_locked: true,
            perturbed: false,
            size: 6,
        }
    }

    #[test]
    fn update_with_full_step_size_copies_reward() {
        let mut t = QTable::<f64>::new();
        let cfg = QConfig {
            alpha: 1.0,
            gamma: 0.0,
            ..Default::default()
        };
        q_update(&mut t, key(1), Action::Forward, 1.0, Some(&key(2)), &cfg);
        assert_eq!(t.get(&key(1), Action::Forward), 1.0);
    }

    #[test]
    fn zero_reward_on_zero_table_is_fixed_point() {
        let mut t = QTable::<f64>::new();
        let cfg = QConfig::default();
        q_update(&mut t, key(1), Action::Forward, 0.0, Some(&key(2)), &cfg);
        assert_eq!(t.get(&key(1), Action::Forward), 0.0);
        assert!(t.iter().all(|(_, row)| row.iter().all(|&v| v == 0.0)));
    }

    fn bandit<S: Float + std::fmt::Debug>() {
        // Two arms with fixed payoffs, gamma = 0: after n pulls of an arm
        // Q = r * (1 - (1 - alpha)^n).
        let cfg = QConfig::<S> {
            alpha: S::from(0.1).unwrap(),
            gamma: S::zero(),
            ..Default::default()
        };
        let payoff = [S::from(0.3).unwrap(), S::from(0.7).unwrap()];
        let arms = [Action::TurnLeft, Action::TurnRight];
        let s = key(1);
        let mut t = QTable::<S>::new();
        for i in 0..1000 {
            q_update(&mut t, s, arms[i % 2], payoff[i % 2], Some(&s), &cfg);
        }
        for (arm, r) in arms.iter().zip(payoff) {
            let expected = r * (S::one() - (S::one() - cfg.alpha).powi(500));
            assert!((t.get(&s, *arm) - expected).abs() < S::from(1e-5).unwrap());
        }
        assert_eq!(t.greedy_actions(&s), vec![Action::TurnRight]);
    }

    #[test]
    fn bandit_converges_to_better_arm() {
        bandit::<f64>();
        bandit::<f32>();
    }

    #[test]
    fn text_round_trip() {
        let mut t = QTable::<f64>::new();
        t.set(key(1), Action::Forward, 0.125);
        t.set(key(2), Action::Toggle, 1.0 / 3.0);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = QTable::<f64>::read_from(&buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_files_are_rejected() {
        let r = QTable::<f64>::read_from("abidegym-qtable 9\n".as_bytes());
        assert!(matches!(r, Err(QTableError::Version { .. })));
        let r = QTable::<f64>::read_from("abidegym-qtable 1\n1 2 3\n".as_bytes());
        assert!(matches!(r, Err(QTableError::Parse { line: 2, .. })));
        let r = QTable::<f64>::read_from("nope\n".as_bytes());
        assert!(matches!(r, Err(QTableError::Parse { line: 1, .. })));
    }

    #[test]
    fn config_bounds() {
        assert!(QConfig::<f64>::default().validate().is_ok());
        let bad = QConfig::<f64> {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QConfig::<f64> {
            gamma: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
