//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors. Data
//! goes to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::agents::qlearn::{self, QConfig, QTable};
use crate::agents::AgentKind;
use crate::config::{ConfigOverrides, DynamicsConfig, CONFIG_ENV_VAR};
use crate::dynamics::{Env, EventKind, ExtendedState, Phase};
use crate::grid::{render_text, Action, Color, Direction};
use crate::harness::{self, read_trace, write_trace, AgentSpec, EpisodeSummary, Metrics, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "abidegym",
    version,
    about = "Agent-aware dynamic DoorKey gridworld"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode and print its metrics.
    Run(RunArgs),
    /// Run agents over a seed list under both scenarios.
    Bench(BenchArgs),
    /// Render a recorded trace step by step.
    Replay(ReplayArgs),
    /// Drive the agent by hand in the terminal.
    Play(PlayArgs),
    /// Train a Q-table and save it.
    Train(TrainArgs),
}

/// Flags mirroring the dynamics config fields. They override values from
/// `--config` (or the file named by ABIDE_CONFIG).
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML config file with the same keys as the flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub timeout_threshold: Option<u32>,
    #[arg(long)]
    pub resize_threshold: Option<u32>,
    #[arg(long)]
    pub resize_increment: Option<usize>,
    #[arg(long)]
    pub initial_size: Option<usize>,
    #[arg(long)]
    pub max_size: Option<usize>,
    #[arg(long, value_parser = parse_color)]
    pub trigger_color: Option<Color>,
    #[arg(long)]
    pub perturbation_enabled: Option<bool>,
    #[arg(long)]
    pub resize_enabled: Option<bool>,
    #[arg(long)]
    pub max_steps_factor: Option<u64>,
}

fn parse_color(s: &str) -> Result<Color, String> {
    s.parse()
}

impl ConfigArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            timeout_threshold: self.timeout_threshold,
            resize_threshold: self.resize_threshold,
            resize_increment: self.resize_increment,
            initial_size: self.initial_size,
            max_size: self.max_size,
            trigger_color: self.trigger_color,
            perturbation_enabled: self.perturbation_enabled,
            resize_enabled: self.resize_enabled,
            max_steps_factor: self.max_steps_factor,
        }
    }

    /// flags > file > defaults
    pub fn resolve(&self) -> anyhow::Result<DynamicsConfig> {
        let file = match &self.config {
            Some(path) => Some(path.clone()),
            None => std::env::var_os(CONFIG_ENV_VAR)
                .filter(|p| !p.is_empty())
                .map(PathBuf::from),
        };
        let base = match file {
            Some(path) => ConfigOverrides::load(&path)?,
            None => ConfigOverrides::default(),
        };
        Ok(base.merge(&self.overrides()).resolve()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Natural,
    Forced,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Natural => Scenario::Natural,
            ScenarioArg::Forced => Scenario::ForcedPerturbation,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "hybrid", value_parser = parse_agent)]
    pub agent: AgentKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "natural")]
    pub scenario: ScenarioArg,
    /// Write the episode trace here.
    #[arg(long, value_name = "FILE")]
    pub trace_out: Option<PathBuf>,
    /// Q-table for the q_learner agent.
    #[arg(long, value_name = "FILE")]
    pub q_table: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated agent names.
    #[arg(long, default_value = "random,key_planner,trigger_planner,hybrid")]
    pub agents: String,
    /// Seeds: comma-separated values or ranges (`1..101`, `1..=100`).
    #[arg(long)]
    pub seeds: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub q_table: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Pause between steps, in milliseconds.
    #[arg(long, default_value_t = 0)]
    pub step_delay: u64,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Environment seed (fixed layout) to train on.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "forced")]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 5000)]
    pub episodes: u32,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

fn parse_agent(s: &str) -> Result<AgentKind, String> {
    s.parse()
}

/// Parses `1,2,5..8,10..=12` into a seed list (order preserved).
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| format!("bad seed {s:?}: {e}"))
        };
        if let Some((a, b)) = item.split_once("..=") {
            seeds.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = item.split_once("..") {
            seeds.extend(num(a)?..num(b)?);
        } else {
            seeds.push(num(item)?);
        }
    }
    Ok(seeds)
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Replay(a) => cmd_replay(&a, out),
        Command::Play(a) => return cmd_play(&a, out, err),
        Command::Train(a) => cmd_train(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn load_q_table(path: &Path) -> anyhow::Result<QTable<f64>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(QTable::read_from(std::io::BufReader::new(file))?)
}

fn agent_spec(kind: AgentKind, q_table: Option<&Path>) -> Result<AgentSpec, Failure> {
    match kind {
        AgentKind::QLearner => {
            let path = q_table
                .ok_or_else(|| Failure::Usage("q_learner needs --q-table (see `train`)".into()))?;
            Ok(AgentSpec::QGreedy(Arc::new(load_q_table(path)?)))
        }
        AgentKind::Scripted => Err(Failure::Usage(
            "the scripted agent cannot be run directly".into(),
        )),
        k => Ok(AgentSpec::Scripted(k)),
    }
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = args.config.resolve()?;
    let spec = agent_spec(args.agent, args.q_table.as_deref())?;
    let mut policy = spec.instantiate(args.seed);
    let trace = harness::run_episode(&config, &mut policy, args.seed, args.scenario.into())
        .map_err(anyhow::Error::from)?;
    if let Some(path) = &args.trace_out {
        write_trace(path, &trace).map_err(anyhow::Error::from)?;
    }
    let metrics = Metrics::aggregate(&[EpisodeSummary::from_trace(&trace)]);
    writeln!(
        out,
        "{}",
        serde_json::to_string(&metrics).expect("metrics serialize")
    )
    .map_err(anyhow::Error::from)?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let seeds = parse_seeds(&args.seeds).map_err(Failure::Usage)?;
    if seeds.is_empty() {
        return Err(Failure::Usage("--seeds must name at least one seed".into()));
    }
    let kinds = args
        .agents
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<AgentKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::Usage)?;
    if kinds.is_empty() {
        return Err(Failure::Usage(
            "--agents must name at least one agent".into(),
        ));
    }
    let specs = kinds
        .into_iter()
        .map(|k| agent_spec(k, args.q_table.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    let config = args.config.resolve()?;
    let report = harness::run_suite(&config, &specs, &seeds).map_err(anyhow::Error::from)?;
    let json = report.to_json();
    match &args.report_out {
        Some(path) => {
            std::fs::write(path, format!("{json}\n"))
                .with_context(|| format!("writing {}", path.display()))?;
            for a in &report.agents {
                let _ = writeln!(
                    out,
                    "{:<16} success {:.3} (natural {:.3}, forced {:.3})  strategy {}",
                    a.agent,
                    a.overall.success_rate,
                    a.natural.success_rate,
                    a.forced_perturbation.success_rate,
                    a.overall.strategy_label
                );
            }
            let _ = writeln!(err, "report written to {}", path.display());
        }
        None => {
            writeln!(out, "{json}").map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let trace =
        read_trace(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let h = &trace.header;
    let io = |r: std::io::Result<()>| r.map_err(|e| Failure::Runtime(e.into()));
    io(writeln!(
        out,
        "seed {} agent {} scenario {} steps {}",
        h.seed,
        h.agent,
        h.scenario,
        trace.steps.len()
    ))?;
    io(writeln!(out, "t=0"))?;
    for row in &h.initial_grid {
        io(writeln!(out, "{row}"))?;
    }
    for step in &trace.steps {
        if args.step_delay > 0 {
            std::thread::sleep(Duration::from_millis(args.step_delay));
        }
        let events: Vec<String> = step.events.iter().map(|e| event_name(e.kind)).collect();
        io(writeln!(
            out,
            "t={} action={:?} reward={} perturbation={}{}",
            step.time_step,
            step.action,
            step.reward,
            step.env_state.perturbation,
            if events.is_empty() {
                String::new()
            } else {
                format!(" events={}", events.join(","))
            }
        ))?;
        for row in &step.grid {
            io(writeln!(out, "{row}"))?;
        }
    }
    io(writeln!(
        out,
        "terminated={} truncated={}",
        trace.footer.terminated, trace.footer.truncated
    ))?;
    Ok(())
}

fn event_name(kind: EventKind) -> String {
    match kind {
        EventKind::WarningEntered => "warning".into(),
        EventKind::PerturbationTriggered => "perturbation".into(),
        EventKind::Resized { old_size, new_size } => format!("resized({old_size}->{new_size})"),
        EventKind::TriggerActivated => "trigger".into(),
        EventKind::DoorUnlocked { cause } => format!("unlocked({cause:?})").to_lowercase(),
        EventKind::GoalReached => "goal".into(),
        EventKind::Truncated => "truncated".into(),
    }
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = args.config.resolve()?;
    let q = QConfig {
        alpha: args.alpha,
        gamma: args.gamma,
        epsilon: args.epsilon,
        episodes: args.episodes,
    };
    q.validate().map_err(Failure::Usage)?;
    let prefix = Scenario::from(args.scenario).noop_prefix(&config);
    let table =
        qlearn::train(&config, args.seed, prefix, &q, args.seed).map_err(anyhow::Error::from)?;
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    table
        .write_to(std::io::BufWriter::new(file))
        .map_err(anyhow::Error::from)?;
    let _ = writeln!(
        out,
        "trained {} states over {} episodes",
        table.len(),
        args.episodes
    );
    Ok(())
}

fn dir_name(d: Direction) -> &'static str {
    match d {
        Direction::East => "E",
        Direction::South => "S",
        Direction::West => "W",
        Direction::North => "N",
    }
}

/// Status line shown under the grid in play mode. The warning phase is
/// highlighted.
pub fn status_line(x: &ExtendedState) -> String {
    let s = &x.env;
    let line = format!(
        "t={} pos={} dir={} key={} door={} phase={:?} perturbation={} idle={}/{} size={}",
        s.time_step,
        s.agent_pos,
        dir_name(s.agent_dir),
        if s.has_key { "held" } else { "no" },
        if s.door_locked { "locked" } else { "unlocked" },
        x.phase,
        s.perturbation,
        x.steps_since_move,
        x.timeout_threshold,
        x.current_size,
    )
    .replace("phase=Normal", "phase=normal")
    .replace("phase=Warning", "phase=warning")
    .replace("phase=Perturbed", "phase=perturbed");
    match x.phase {
        Phase::Warning => format!("\x1b[1;33mWARNING {line}\x1b[0m"),
        _ => line,
    }
}

/// Keys read from one input line. Arrow escape sequences map to turns and
/// forward; `q` maps to `None` (quit).
pub fn parse_keys(line: &str) -> Vec<Option<Action>> {
    let mut keys = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        let action = match c {
            '\x1b' => {
                if chars.next_if_eq(&'[').is_none() {
                    continue;
                }
                match chars.next() {
                    Some('A') => Some(Action::Forward),
                    Some('C') => Some(Action::TurnRight),
                    Some('D') => Some(Action::TurnLeft),
                    _ => continue,
                }
            }
            'w' => Some(Action::Forward),
            'a' => Some(Action::TurnLeft),
            'd' => Some(Action::TurnRight),
            'p' => Some(Action::Pickup),
            'x' => Some(Action::Drop),
            't' => Some(Action::Toggle),
            '.' => Some(Action::Noop),
            'q' => None,
            _ => continue,
        };
        keys.push(action);
    }
    keys
}

const PLAY_HELP: &str = "keys: up/w forward, left/a right/d turn, p pickup, x drop, t toggle, . wait, q quit (enter to submit)";

/// The interactive loop over arbitrary streams.
pub fn play_session(
    config: DynamicsConfig,
    seed: u64,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    let (mut env, _) = Env::reset(config, seed)?;
    let show = |env: &Env, out: &mut dyn Write| -> std::io::Result<()> {
        write!(out, "{}", render_text(env.world()))?;
        writeln!(out, "{}", status_line(&env.extended()))
    };
    writeln!(out, "{PLAY_HELP}")?;
    show(&env, out)?;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        for key in parse_keys(&line) {
            let Some(action) = key else {
                return Ok(());
            };
            let t = env.step(action)?;
            for e in &t.events {
                writeln!(out, "event: {}", event_name(e.kind))?;
            }
            show(&env, out)?;
            if t.terminated || t.truncated {
                writeln!(
                    out,
                    "{} after {} steps (reward {})",
                    if t.terminated {
                        "goal reached"
                    } else {
                        "out of time"
                    },
                    t.observation.time_step,
                    t.reward
                )?;
                return Ok(());
            }
        }
    }
}

fn cmd_play(args: &PlayArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let stdin = std::io::stdin();
    if !stdin.is_terminal() {
        let _ = writeln!(err, "error: play needs an interactive terminal on stdin");
        return EXIT_USAGE;
    }
    let config = match args.config.resolve() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_RUNTIME;
        }
    };
    match play_session(config, args.seed, &mut stdin.lock(), out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
