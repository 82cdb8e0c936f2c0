use std::fmt::Write as _;
use std::fs;

use ctxcost::trajectory::{load_trajectory, save_trajectory, TrajectoryError};
use ctxcost::TokenCount;

fn seg(text: &str, tokens: u64) -> String {
    format!(r#"{{"text":{},"tokens":{tokens}}}"#, serde_json::to_string(text).unwrap())
}

/// Writes a 50-turn log line by line in the canonical key order, with
/// multi-line text, unicode and an extra field on every fifth turn.
fn fixture() -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"{{"id":"fixture-50","system_prompt":{},"user_prompt":{},"source":"writer"}}"#,
        seg("You are a helpful agent.\nUse tools.", 812),
        seg("Fix issue #42: \"off-by-one\" in ranges ✓", 97)
    );
    for i in 1..=50u64 {
        let obs = (0..i % 7).map(|l| format!("line {l} of turn {i}")).collect::<Vec<_>>().join("\n");
        let extra = if i % 5 == 0 { format!(r#","meta":{{"exit_code":{},"tool":"bash"}}"#, i % 3) } else { String::new() };
        let _ = writeln!(
            s,
            r#"{{"index":{i},"reasoning":{},"action":{},"observation":{}{extra}}}"#,
            seg(&format!("thinking about step {i}"), 40 + i),
            seg(&format!("run_tests --case {i}"), 9),
            seg(&obs, 25 * i),
        );
    }
    s
}

#[test]
fn fifty_turn_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.jsonl");
    let dst = dir.path().join("out.jsonl");
    let text = fixture();
    fs::write(&src, &text).unwrap();
    let traj = load_trajectory(&src).unwrap();
    assert_eq!(traj.turns.len(), 50);
    assert_eq!(traj.turn(10).extra["meta"]["tool"], "bash");
    save_trajectory(&traj, &dst).unwrap();
    assert_eq!(fs::read_to_string(&dst).unwrap(), text);
}

#[test]
fn totals_of_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.jsonl");
    fs::write(&src, fixture()).unwrap();
    let t = load_trajectory(&src).unwrap().token_totals();
    assert_eq!(t.reasoning, TokenCount(50 * 40 + 1275));
    assert_eq!(t.action, TokenCount(450));
    assert_eq!(t.observation, TokenCount(25 * 1275));
    assert_eq!(t.prompt, TokenCount(909));
}

#[test]
fn header_only_file_has_no_turns() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.jsonl");
    fs::write(&src, format!("{{\"id\":\"e\",\"system_prompt\":{},\"user_prompt\":{}}}\n", seg("", 100), seg("", 200))).unwrap();
    let traj = load_trajectory(&src).unwrap();
    assert!(traj.turns.is_empty());
    let t = traj.token_totals();
    assert_eq!((t.reasoning.0, t.action.0, t.observation.0, t.prompt.0), (0, 0, 0, 300));
}

#[test]
fn gap_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.jsonl");
    let mut text = format!("{{\"id\":\"g\",\"system_prompt\":{},\"user_prompt\":{}}}\n", seg("", 1), seg("", 1));
    for i in [1, 2, 4] {
        let _ = writeln!(text, r#"{{"index":{i},"reasoning":{},"action":{},"observation":{}}}"#, seg("", 1), seg("", 1), seg("", 1));
    }
    fs::write(&src, text).unwrap();
    match load_trajectory(&src) {
        Err(TrajectoryError::Validation(msg)) => assert!(msg.contains("gap at index 3"), "{msg}"),
        other => panic!("expected validation error, got {other:?}"),
    }
}
