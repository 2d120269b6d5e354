//! End-to-end command-line tests: exit-code contract, output determinism,
//! and the game-document round trip through a file.

use std::process::Command;

fn run(args: &[&str]) -> (i32, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ghz-lab"))
        .args(args)
        .env_remove("THREADS")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout, out.stderr)
}

#[test]
fn exit_zero_on_success() {
    let (code, stdout, _) = run(&["value", "--game", "ghz"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(doc["value"], "3/4");
}

#[test]
fn exit_two_on_usage_error() {
    let (code, _, _) = run(&["no-such-command"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["value", "--no-such-flag"]);
    assert_eq!(code, 2);
    // Out-of-range coordinate is a usage error, not an assertion failure.
    let (code, _, stderr) = run(&["repvalue", "--game", "ghz", "--n", "2", "--coordinate", "5"]);
    assert_eq!(code, 2, "stderr: {}", String::from_utf8_lossy(&stderr));
}

#[test]
fn exit_two_on_budget_error() {
    let (code, _, stderr) = run(&["repvalue", "--game", "ghz", "--n", "2", "--budget", "10"]);
    assert_eq!(code, 2, "stderr: {}", String::from_utf8_lossy(&stderr));
    assert!(String::from_utf8_lossy(&stderr).contains("budget"));
}

#[test]
fn exit_one_on_measured_assertion_failure() {
    // With an absurd contraction target the win sequence cannot decay fast
    // enough, so the trace reports a failed inequality.
    let (code, _, stderr) = run(&[
        "criterion-sim",
        "--game",
        "ghz",
        "--n",
        "2",
        "--rho",
        "1/100000",
        "--epsilon",
        "99/100",
    ]);
    assert_eq!(code, 1, "stderr: {}", String::from_utf8_lossy(&stderr));
}

#[test]
fn reports_are_byte_deterministic() {
    for args in [
        vec!["selftest", "--quick", "--seed", "5"],
        vec!["criterion-sim", "--game", "ghz", "--n", "2", "--format", "csv"],
        vec!["partition", "--n", "3", "--seed", "9", "--format", "csv"],
        vec!["demo", "--n", "2", "--seed", "3", "--diagnostic-cap", "1000"],
    ] {
        let (code_a, out_a, _) = run(&args);
        let (code_b, out_b, _) = run(&args);
        assert_eq!(code_a, code_b);
        assert_eq!(code_a, 0, "args {args:?}");
        assert_eq!(out_a, out_b, "nondeterministic output for {args:?}");
    }
}

#[test]
fn threads_flag_does_not_change_results() {
    let (_, single, _) = run(&["repvalue", "--game", "ghz", "--n", "2"]);
    let (_, multi, _) = run(&["repvalue", "--game", "ghz", "--n", "2", "--threads", "4"]);
    assert_eq!(single, multi);
}

#[test]
fn game_documents_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("ghz-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("game.json");
    let doc = ghz_lab::games::ghz_game().to_json();
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let (code, stdout, _) = run(&["value", "--game", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let out: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(out["value"], "3/4");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn output_file_and_config_are_honored() {
    let dir = std::env::temp_dir().join(format!("ghz-lab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out_path = dir.join("report.json");
    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, "threads = 2\n[budgets]\nsearch = 1048576\n").unwrap();
    let (code, stdout, _) = run(&[
        "value",
        "--game",
        "ghz",
        "--out",
        out_path.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["value"], "3/4");
    std::fs::remove_dir_all(&dir).ok();
}
