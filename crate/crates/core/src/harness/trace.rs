//! Line-delimited episode traces.
//!
//! A trace file is UTF-8 with one JSON object per line: a header record,
//! one step record per environment step, and a footer record. Every record
//! carries a `record` tag (`header`, `step` or `footer`). The header's
//! `schema_version` is mandatory and must equal [`SCHEMA_VERSION`].
//!
//! Step records include the rendered grid rows, so a trace can be displayed
//! without re-simulating it.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::Scenario;
use crate::agents::AgentKind;
use crate::config::DynamicsConfig;
use crate::dynamics::{DynamicEvent, EnvState, ExtendedState};
use crate::grid::Action;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported trace schema version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub config: DynamicsConfig,
    pub seed: u64,
    pub agent: AgentKind,
    pub scenario: Scenario,
    pub initial_state: EnvState,
    pub initial_grid: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub time_step: u64,
    pub action: Action,
    pub env_state: EnvState,
    pub reward: f64,
    pub events: Vec<DynamicEvent>,
    pub grid: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub terminated: bool,
    pub truncated: bool,
    pub final_state: ExtendedState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
    pub footer: TraceFooter,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header(TraceHeader),
    Step(TraceStep),
    Footer(TraceFooter),
}

impl EpisodeTrace {
    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn events(&self) -> impl Iterator<Item = &DynamicEvent> {
        self.steps.iter().flat_map(|s| &s.events)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        let line = |r: &Record| serde_json::to_string(r).expect("trace records serialize");
        writeln!(out, "{}", line(&Record::Header(self.header.clone())))?;
        for step in &self.steps {
            writeln!(out, "{}", line(&Record::Step(step.clone())))?;
        }
        writeln!(out, "{}", line(&Record::Footer(self.footer.clone())))?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut header = None;
        let mut steps: Vec<TraceStep> = Vec::new();
        let mut footer = None;
        let mut last_line = 0;

        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            last_line = line_no;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| TraceError::Parse {
                line: line_no,
                message,
            };
            let value: Value = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;

            if header.is_none() {
                if value.get("record").and_then(Value::as_str) != Some("header") {
                    return Err(err("first record must be the header".into()));
                }
                let version = value
                    .get("schema_version")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| err("missing schema_version".into()))?;
                if version != u64::from(SCHEMA_VERSION) {
                    return Err(TraceError::Version { found: version });
                }
            }
            if footer.is_some() {
                return Err(err("record after footer".into()));
            }

            match serde_json::from_value::<Record>(value).map_err(|e| err(e.to_string()))? {
                Record::Header(h) if header.is_none() => header = Some(h),
                Record::Header(_) => return Err(err("duplicate header".into())),
                Record::Step(s) => {
                    let expected = steps.len() as u64 + 1;
                    if s.time_step != expected {
                        return Err(err(format!(
                            "time_step {} out of sequence (expected {expected})",
                            s.time_step
                        )));
                    }
                    steps.push(s);
                }
                Record::Footer(f) => footer = Some(f),
            }
        }

        let header = header.ok_or(TraceError::Parse {
            line: 1,
            message: "empty trace".into(),
        })?;
        let footer = footer.ok_or(TraceError::Parse {
            line: last_line + 1,
            message: "missing footer (truncated trace)".into(),
        })?;
        Ok(EpisodeTrace {
            header,
            steps,
            footer,
        })
    }

    pub fn from_text(text: &str) -> Result<Self, TraceError> {
        Self::read_from(text.as_bytes())
    }
}

pub fn write_trace(path: impl AsRef<Path>, trace: &EpisodeTrace) -> Result<(), TraceError> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    trace.write_to(&mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<EpisodeTrace, TraceError> {
    EpisodeTrace::read_from(BufReader::new(fs::File::open(path)?))
}
