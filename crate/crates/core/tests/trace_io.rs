use std::io::Write;

use abidegym::agents::{AgentKind, AgentPolicy};
use abidegym::harness::{
    read_trace, run_actions, run_episode, verify_replay, write_trace, EpisodeTrace, ReplayMismatch,
    Scenario, TraceError,
};
use abidegym::{Action, DynamicsConfig};

fn sample() -> EpisodeTrace {
    let mut agent = AgentPolicy::scripted(AgentKind::Hybrid, 0).unwrap();
    run_episode(
        &DynamicsConfig::default(),
        &mut agent,
        4,
        Scenario::ForcedPerturbation,
    )
    .unwrap()
}

#[test]
fn file_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let trace = sample();
    write_trace(&path, &trace).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back, trace);
    // and writing it again gives the same bytes
    let again = dir.path().join("u.jsonl");
    write_trace(&again, &back).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn one_record_per_line() {
    let trace = sample();
    let text = trace.to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), trace.steps.len() + 2);
    assert!(lines[0].starts_with("{\"record\":\"header\""));
    assert!(lines[0].contains("\"schema_version\":1"));
    assert!(lines[1].starts_with("{\"record\":\"step\""));
    assert!(lines.last().unwrap().starts_with("{\"record\":\"footer\""));
}

#[test]
fn truncated_file_is_a_parse_error() {
    let text = sample().to_text();
    let lines: Vec<&str> = text.lines().collect();

    // footer missing
    let cut = lines[..lines.len() - 1].join("\n");
    match EpisodeTrace::from_text(&cut) {
        Err(TraceError::Parse { line, .. }) => assert_eq!(line, lines.len()),
        other => panic!("expected parse error, got {other:?}"),
    }

    // last line cut mid-record
    let mut partial = lines[..3].join("\n");
    partial.push('\n');
    partial.push_str(&lines[3][..lines[3].len() / 2]);
    match EpisodeTrace::from_text(&partial) {
        Err(TraceError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn version_mismatch_is_reported() {
    let text = sample()
        .to_text()
        .replacen("\"schema_version\":1", "\"schema_version\":2", 1);
    match EpisodeTrace::from_text(&text) {
        Err(TraceError::Version { found }) => assert_eq!(found, 2),
        other => panic!("expected version error, got {other:?}"),
    }
    let missing = sample().to_text().replacen("\"schema_version\":1,", "", 1);
    assert!(matches!(
        EpisodeTrace::from_text(&missing),
        Err(TraceError::Parse { line: 1, .. })
    ));
}

#[test]
fn structural_errors_carry_line_numbers() {
    let text = sample().to_text();
    let lines: Vec<&str> = text.lines().collect();

    let swapped = [lines[0], lines[2], lines[1]].join("\n");
    assert!(matches!(
        EpisodeTrace::from_text(&swapped),
        Err(TraceError::Parse { line: 2, .. })
    ));

    let headless = lines[1..].join("\n");
    assert!(matches!(
        EpisodeTrace::from_text(&headless),
        Err(TraceError::Parse { line: 1, .. })
    ));

    let mut trailing = text.clone();
    trailing.push_str(lines[1]);
    trailing.push('\n');
    assert!(matches!(
        EpisodeTrace::from_text(&trailing),
        Err(TraceError::Parse { line, .. }) if line == lines.len() + 1
    ));

    assert!(matches!(
        EpisodeTrace::from_text(""),
        Err(TraceError::Parse { .. })
    ));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        read_trace(dir.path().join("nope")),
        Err(TraceError::Io(_))
    ));
}

#[test]
fn blank_lines_are_ignored() {
    let trace = sample();
    let spaced = trace.to_text().replace('\n', "\n\n");
    assert_eq!(EpisodeTrace::from_text(&spaced).unwrap(), trace);
}

#[test]
fn replay_reproduces_every_state() {
    for seed in 0..20 {
        for kind in [
            AgentKind::Random,
            AgentKind::KeyPlanner,
            AgentKind::TriggerPlanner,
            AgentKind::Hybrid,
        ] {
            for scenario in Scenario::ALL {
                let mut agent = AgentPolicy::scripted(kind, seed).unwrap();
                let trace =
                    run_episode(&DynamicsConfig::default(), &mut agent, seed, scenario).unwrap();
                assert_eq!(
                    verify_replay(&trace),
                    Ok(()),
                    "{kind} seed {seed} {scenario}"
                );
                let replayed =
                    run_actions(&DynamicsConfig::default(), seed, &trace.actions()).unwrap();
                let states = |t: &EpisodeTrace| {
                    t.steps
                        .iter()
                        .map(|s| s.env_state.clone())
                        .collect::<Vec<_>>()
                };
                assert_eq!(states(&replayed), states(&trace));
            }
        }
    }
}

#[test]
fn tampered_trace_fails_replay() {
    let mut trace = sample();
    let i = trace.steps.len() / 2;
    trace.steps[i].env_state.agent_pos.x += 1;
    assert!(matches!(
        verify_replay(&trace),
        Err(ReplayMismatch::State { .. })
    ));

    let mut trace = sample();
    trace.steps[0].action = Action::Forward;
    assert!(verify_replay(&trace).is_err());
}

#[test]
fn floats_survive_the_round_trip() {
    let trace = sample();
    let last = trace.steps.last().unwrap();
    assert!(last.reward > 0.0);
    let back = EpisodeTrace::from_text(&trace.to_text()).unwrap();
    assert_eq!(
        back.steps.last().unwrap().reward.to_bits(),
        last.reward.to_bits()
    );
}

#[test]
fn write_to_any_sink() {
    let trace = sample();
    let mut buf = Vec::new();
    trace.write_to(&mut buf).unwrap();
    buf.flush().unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), trace.to_text());
}
