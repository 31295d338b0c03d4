//! Per-episode summaries and their aggregation: success rate, adaptation
//! latency and strategy labels.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::trace::EpisodeTrace;
use crate::dynamics::{EventKind, UnlockCause};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyLabel {
    Key,
    Trigger,
    Hybrid,
    None,
}

impl fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyLabel::Key => "key",
            StrategyLabel::Trigger => "trigger",
            StrategyLabel::Hybrid => "hybrid",
            StrategyLabel::None => "none",
        })
    }
}

/// How the door was first unlocked in this episode.
pub fn classify_strategy(trace: &EpisodeTrace) -> StrategyLabel {
    trace
        .events()
        .find_map(|e| match e.kind {
            EventKind::DoorUnlocked {
                cause: UnlockCause::Key,
            } => Some(StrategyLabel::Key),
            EventKind::DoorUnlocked {
                cause: UnlockCause::Trigger,
            } => Some(StrategyLabel::Trigger),
            _ => None,
        })
        .unwrap_or(StrategyLabel::None)
}

/// Steps from the perturbation to the first trigger entry.
pub fn adaptation_latency(trace: &EpisodeTrace) -> Option<u64> {
    let perturbed_at = trace
        .events()
        .find(|e| e.kind == EventKind::PerturbationTriggered)?
        .time_step;
    let activated_at = trace
        .events()
        .find(|e| e.kind == EventKind::TriggerActivated && e.time_step > perturbed_at)?
        .time_step;
    Some(activated_at - perturbed_at)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub success: bool,
    pub steps: u64,
    pub perturbed: bool,
    pub adaptation_latency: Option<u64>,
    pub strategy: StrategyLabel,
    pub resizes: u32,
}

impl EpisodeSummary {
    pub fn from_trace(trace: &EpisodeTrace) -> Self {
        Self {
            seed: trace.header.seed,
            success: trace.footer.terminated,
            steps: trace.steps.len() as u64,
            perturbed: trace
                .events()
                .any(|e| e.kind == EventKind::PerturbationTriggered),
            adaptation_latency: adaptation_latency(trace),
            strategy: classify_strategy(trace),
            resizes: trace.footer.final_state.resize_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_steps_to_goal: Option<f64>,
    pub perturbation_rate: f64,
    /// Mean over episodes where the trigger was reached after a
    /// perturbation.
    pub adaptation_latency: Option<f64>,
    pub strategy_label: StrategyLabel,
    pub resize_count_mean: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Label for a set of episodes: `Hybrid` when the key was used in some
/// unperturbed episode and the trigger in some perturbed one, otherwise the
/// more frequent of `Key` / `Trigger` (ties go to `Key`), or `None` if the
/// door was never unlocked.
pub fn suite_label(episodes: &[EpisodeSummary]) -> StrategyLabel {
    let key_clean = episodes
        .iter()
        .any(|e| e.strategy == StrategyLabel::Key && !e.perturbed);
    let trigger_perturbed = episodes
        .iter()
        .any(|e| e.strategy == StrategyLabel::Trigger && e.perturbed);
    if key_clean && trigger_perturbed {
        return StrategyLabel::Hybrid;
    }
    let count = |l| episodes.iter().filter(|e| e.strategy == l).count();
    let (keys, triggers) = (count(StrategyLabel::Key), count(StrategyLabel::Trigger));
    match (keys, triggers) {
        (0, 0) => StrategyLabel::None,
        (k, t) if k >= t => StrategyLabel::Key,
        _ => StrategyLabel::Trigger,
    }
}

impl Metrics {
    pub fn aggregate(episodes: &[EpisodeSummary]) -> Metrics {
        let n = episodes.len().max(1) as f64;
        let frac = |pred: &dyn Fn(&EpisodeSummary) -> bool| {
            episodes.iter().filter(|e| pred(e)).count() as f64 / n
        };
        Metrics {
            episodes: episodes.len(),
            success_rate: frac(&|e| e.success),
            mean_steps_to_goal: mean(
                episodes
                    .iter()
                    .filter(|e| e.success)
                    .map(|e| e.steps as f64),
            ),
            perturbation_rate: frac(&|e| e.perturbed),
            adaptation_latency: mean(
                episodes
                    .iter()
                    .filter_map(|e| e.adaptation_latency)
                    .map(|l| l as f64),
            ),
            strategy_label: suite_label(episodes),
            resize_count_mean: mean(episodes.iter().map(|e| f64::from(e.resizes))).unwrap_or(0.0),
        }
    }
}
