//! Dynamics configuration, its validation and the flat config-file format.
//!
//! A config file is a flat TOML document whose keys are exactly the
//! [`DynamicsConfig`] field names:
//!
//! ```text
//! timeout_threshold = 10
//! resize_threshold = 20
//! trigger_color = "orange"
//! resize_enabled = false
//! ```
//!
//! Unknown keys are rejected. Unset keys fall back to the defaults, except
//! that an unset `resize_threshold` follows `2 * timeout_threshold`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Color, MIN_SIZE};

/// Environment variable naming a config file.
pub const CONFIG_ENV_VAR: &str = "ABIDE_CONFIG";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("timeout_threshold must be >= 2 (got {0})")]
    TimeoutThreshold(u32),
    #[error("resize_threshold must be > timeout_threshold (got {resize} <= {timeout})")]
    ResizeThreshold { resize: u32, timeout: u32 },
    #[error("resize_increment must be >= 1 (got {0})")]
    ResizeIncrement(usize),
    #[error("initial_size must be >= {MIN_SIZE} (got {0})")]
    InitialSize(usize),
    #[error("max_size must be >= initial_size (got {max} < {initial})")]
    MaxSize { max: usize, initial: usize },
    #[error("max_steps_factor must be >= 1 (got {0})")]
    MaxStepsFactor(u64),
    #[error("cannot read config file {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed config file: {0}")]
    Parse(String),
}

/// Thresholds and increments governing perturbation and resizing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub timeout_threshold: u32,
    pub resize_threshold: u32,
    pub resize_increment: usize,
    pub initial_size: usize,
    pub max_size: usize,
    pub trigger_color: Color,
    pub perturbation_enabled: bool,
    pub resize_enabled: bool,
    /// Step budget is `max_steps_factor * size^2` for the current size.
    pub max_steps_factor: u64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            timeout_threshold: 10,
            resize_threshold: 20,
            resize_increment: 2,
            initial_size: 6,
            max_size: 16,
            trigger_color: Color::Orange,
            perturbation_enabled: true,
            resize_enabled: true,
            max_steps_factor: 10,
        }
    }
}

impl DynamicsConfig {
    /// Defaults with the given timeout and a resize threshold of twice that.
    pub fn with_timeout(timeout_threshold: u32) -> Self {
        Self {
            timeout_threshold,
            resize_threshold: timeout_threshold.saturating_mul(2),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.timeout_threshold < 2 {
            return Err(ConfigError::TimeoutThreshold(self.timeout_threshold));
        }
        if self.resize_threshold <= self.timeout_threshold {
            return Err(ConfigError::ResizeThreshold {
                resize: self.resize_threshold,
                timeout: self.timeout_threshold,
            });
        }
        if self.resize_increment < 1 {
            return Err(ConfigError::ResizeIncrement(self.resize_increment));
        }
        if self.initial_size < MIN_SIZE {
            return Err(ConfigError::InitialSize(self.initial_size));
        }
        if self.max_size < self.initial_size {
            return Err(ConfigError::MaxSize {
                max: self.max_size,
                initial: self.initial_size,
            });
        }
        if self.max_steps_factor < 1 {
            return Err(ConfigError::MaxStepsFactor(self.max_steps_factor));
        }
        Ok(())
    }

    /// Step budget for a grid of side `size`.
    pub fn budget(&self, size: usize) -> u64 {
        self.max_steps_factor * (size as u64) * (size as u64)
    }

    /// Warning fires when the inactivity counter reaches this value.
    pub fn warning_threshold(&self) -> u32 {
        self.timeout_threshold.div_ceil(2)
    }

    /// Defaults, then the file named by `ABIDE_CONFIG` (if any), then
    /// `overrides`.
    pub fn from_env_and(overrides: &ConfigOverrides) -> Result<Self, ConfigError> {
        let mut layered = ConfigOverrides::default();
        if let Ok(path) = std::env::var(CONFIG_ENV_VAR) {
            if !path.is_empty() {
                layered = ConfigOverrides::load(path)?;
            }
        }
        layered.merge(overrides).resolve()
    }
}

/// A partial config: any subset of the fields. Used for file contents and
/// command-line flags before layering onto the defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub timeout_threshold: Option<u32>,
    pub resize_threshold: Option<u32>,
    pub resize_increment: Option<usize>,
    pub initial_size: Option<usize>,
    pub max_size: Option<usize>,
    pub trigger_color: Option<Color>,
    pub perturbation_enabled: Option<bool>,
    pub resize_enabled: Option<bool>,
    pub max_steps_factor: Option<u64>,
}

impl ConfigOverrides {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// `other` wins wherever it is set.
    pub fn merge(&self, other: &ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            timeout_threshold: other.timeout_threshold.or(self.timeout_threshold),
            resize_threshold: other.resize_threshold.or(self.resize_threshold),
            resize_increment: other.resize_increment.or(self.resize_increment),
            initial_size: other.initial_size.or(self.initial_size),
            max_size: other.max_size.or(self.max_size),
            trigger_color: other.trigger_color.or(self.trigger_color),
            perturbation_enabled: other.perturbation_enabled.or(self.perturbation_enabled),
            resize_enabled: other.resize_enabled.or(self.resize_enabled),
            max_steps_factor: other.max_steps_factor.or(self.max_steps_factor),
        }
    }

    /// Fills unset fields from the defaults and validates.
    pub fn resolve(&self) -> Result<DynamicsConfig, ConfigError> {
        let d = DynamicsConfig::default();
        let timeout_threshold = self.timeout_threshold.unwrap_or(d.timeout_threshold);
        let config = DynamicsConfig {
            timeout_threshold,
            resize_threshold: self
                .resize_threshold
                .unwrap_or(timeout_threshold.saturating_mul(2)),
            resize_increment: self.resize_increment.unwrap_or(d.resize_increment),
            initial_size: self.initial_size.unwrap_or(d.initial_size),
            max_size: self.max_size.unwrap_or(d.max_size),
            trigger_color: self.trigger_color.unwrap_or(d.trigger_color),
            perturbation_enabled: self.perturbation_enabled.unwrap_or(d.perturbation_enabled),
            resize_enabled: self.resize_enabled.unwrap_or(d.resize_enabled),
            max_steps_factor: self.max_steps_factor.unwrap_or(d.max_steps_factor),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = DynamicsConfig::default();
        c.validate().unwrap();
        assert_eq!(c.resize_threshold, 2 * c.timeout_threshold);
        assert_eq!(c.budget(6), 360);
        assert_eq!(c.warning_threshold(), 5);
        assert_eq!(DynamicsConfig::with_timeout(31).warning_threshold(), 16);
    }

    #[test]
    fn violated_bounds_are_named() {
        let bad = DynamicsConfig {
            resize_threshold: 10,
            ..Default::default()
        };
        assert_eq!(
            bad.validate(),
            Err(ConfigError::ResizeThreshold {
                resize: 10,
                timeout: 10
            })
        );
        let bad = DynamicsConfig::with_timeout(1);
        assert_eq!(bad.validate(), Err(ConfigError::TimeoutThreshold(1)));
        let bad = DynamicsConfig {
            initial_size: 4,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::InitialSize(4)));
        let bad = DynamicsConfig {
            max_size: 5,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(ConfigError::MaxSize { .. })));
        let bad = DynamicsConfig {
            resize_increment: 0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::ResizeIncrement(0)));
    }

    #[test]
    fn file_values_layer_over_defaults() {
        let file = ConfigOverrides::parse(
            "timeout_threshold = 6\ntrigger_color = \"blue\"\nresize_enabled = false\n",
        )
        .unwrap();
        let c = file.resolve().unwrap();
        assert_eq!(c.timeout_threshold, 6);
        assert_eq!(c.resize_threshold, 12);
        assert_eq!(c.trigger_color, Color::Blue);
        assert!(!c.resize_enabled);
        assert_eq!(c.max_size, 16);
    }

    #[test]
    fn flags_beat_file() {
        let file = ConfigOverrides::parse("timeout_threshold = 6\nmax_size = 12").unwrap();
        let flags = ConfigOverrides {
            timeout_threshold: Some(4),
            ..Default::default()
        };
        let c = file.merge(&flags).resolve().unwrap();
        assert_eq!(c.timeout_threshold, 4);
        assert_eq!(c.max_size, 12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ConfigOverrides::parse("timeout = 3"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ConfigOverrides::parse("[section]\ntimeout_threshold = 3"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn invalid_file_values_fail_validation() {
        let file = ConfigOverrides::parse("timeout_threshold = 8\nresize_threshold = 8").unwrap();
        assert!(matches!(
            file.resolve(),
            Err(ConfigError::ResizeThreshold { .. })
        ));
    }
}
