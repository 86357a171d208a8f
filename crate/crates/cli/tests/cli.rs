use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use twistlab::construction::{case_a_inputs, ConstructionState};
use twistlab::oracles::{OracleReport, Witness};

fn twistlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab"))
        .args(args)
        .env("TWISTLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn construct(dir: &Path, depth: &str) -> ConstructionState {
    let out = dir.to_str().unwrap();
    let o = twistlab(&["construct", "--case", "a", "--depth", depth, "--seed", "7", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&fs::read_to_string(dir.join("state.json")).unwrap()).unwrap()
}

#[test]
fn construct_writes_state_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let state = construct(dir.path(), "3");
    assert_eq!(state.levels.len(), 3);
    assert_eq!(state.level(2).unwrap().m, 481);
    let csv = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,c_n,s_n,m_n,M_n,G_n_size"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn construct_rejects_bad_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&twistlab(&["construct", "--depth", "0", "--out", out])), 64);
    assert_eq!(code(&twistlab(&["construct", "--depth", "11", "--out", out])), 64);
    assert_eq!(code(&twistlab(&["construct", "--case", "b", "--out", out])), 64);
    assert_eq!(code(&twistlab(&["construct", "--case", "c", "--out", out])), 64);
    assert_eq!(code(&twistlab(&["construct", "--case", "custom", "--out", out])), 64);
    assert_eq!(code(&twistlab(&["construct", "--bogus"])), 64);
    assert!(!dir.path().join("state.json").exists());
    assert_eq!(code(&twistlab(&["--help"])), 0);
}

#[test]
fn custom_input_reproduces_case_a() {
    let dir = tempfile::tempdir().unwrap();
    let reference = construct(dir.path(), "2");
    let inputs = case_a_inputs(2, 2).unwrap();
    let json = serde_json::json!({
        "functional": inputs.functional,
        "split": inputs.split,
        "xs": inputs.xs,
        "ds": inputs.ds,
    });
    let input = dir.path().join("custom.json");
    fs::write(&input, json.to_string()).unwrap();
    let out = dir.path().join("custom");
    let o = twistlab(&[
        "construct", "--case", "custom", "--depth", "2", "--seed", "7",
        "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let state: ConstructionState =
        serde_json::from_str(&fs::read_to_string(out.join("state.json")).unwrap()).unwrap();
    assert_eq!(state.case, "custom");
    assert_eq!(state.levels, reference.levels);
}

#[test]
fn custom_input_failing_kernel_is_a_construction_failure() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = case_a_inputs(2, 2).unwrap();
    let mut xs = inputs.xs.clone();
    xs[0] = twistlab::FinSeq::from_ints(&[(1, 1), (2, 1)]);
    let json = serde_json::json!({
        "functional": inputs.functional,
        "split": inputs.split,
        "xs": xs,
        "ds": inputs.ds,
    });
    let input = dir.path().join("custom.json");
    fs::write(&input, json.to_string()).unwrap();
    let o = twistlab(&[
        "construct", "--case", "custom", "--depth", "2",
        "--input", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_healthy_and_static_only() {
    let dir = tempfile::tempdir().unwrap();
    construct(dir.path(), "3");
    let state = dir.path().join("state.json");
    let out = dir.path().to_str().unwrap();
    let o = twistlab(&["verify", "--state", state.to_str().unwrap(), "--trials", "200", "--out", out]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("min margin"));
    let transcript: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("transcript.json")).unwrap()).unwrap();
    assert_eq!(transcript["passed"], true);
    assert_eq!(transcript["chain"].as_array().unwrap().len(), 2);

    let o = twistlab(&["verify", "--state", state.to_str().unwrap(), "--trials", "0", "--out", out]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("skipped (trials = 0)"));
}

#[test]
fn verify_names_the_tampered_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut state = construct(dir.path(), "3");
    state.levels[1].m = 1;
    let path = dir.path().join("tampered.json");
    fs::write(&path, serde_json::to_string(&state).unwrap()).unwrap();
    let o = twistlab(&[
        "verify", "--state", path.to_str().unwrap(), "--trials", "0",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("level 2: lemma5 failed"), "{}", stdout(&o));
}

#[test]
fn eval_prints_fifteen_digits() {
    let o = twistlab(&["eval", r#"{"ribe":{"1":"1/2","2":"1/2"}}"#]);
    assert_eq!(stdout(&o).trim(), "-0.693147180559945");
    let o = twistlab(&["eval", r#"{"quasi_norm":{"r":0,"x":{"1":"1"}}}"#]);
    assert_eq!(stdout(&o).trim(), "1");
    let o = twistlab(&["eval", r#"{"nonsplit":{"n":8,"c":"1"}}"#]);
    assert_eq!(stdout(&o).trim(), "-2.07944154167984");
    assert_eq!(code(&twistlab(&["eval", "{not json"])), 64);
    assert_eq!(code(&twistlab(&["eval", r#"{"ribe":{"0":"1"}}"#])), 64);
}

#[test]
fn oracle_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    construct(dir.path(), "3");
    let state = dir.path().join("state.json");
    let out = dir.path().to_str().unwrap();
    let report_path = dir.path().join("oracle-report.json");
    let read = || -> OracleReport { serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap() };

    let o = twistlab(&["oracle", "lemma5", "--state", state.to_str().unwrap(), "--level", "2", "--out", out]);
    assert_eq!(code(&o), 0);
    let r = read();
    assert!(r.best_violation < 0.0 && r.target == "lemma5");

    let o = twistlab(&["oracle", "quasi-constant", "--kind", "ribe", "--trials", "1e3", "--out", out]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("best value"));
    let r = read();
    assert_eq!(r.trials, 1000);
    assert!(r.best_value > 0.5 && r.best_value < 1.0);

    let o = twistlab(&["oracle", "chain", "--budget", "0", "--out", out]);
    assert_eq!(code(&o), 0);
    let r = read();
    assert_eq!((r.trials, r.best_violation, r.witness), (0, -9.0, Witness::None));

    let o = twistlab(&["oracle", "crosspolytope", "--state", state.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 0);
    assert!(read().best_value > 0.0);

    assert_eq!(code(&twistlab(&["oracle", "nonsense", "--out", out])), 64);
    assert_eq!(code(&twistlab(&["oracle", "lemma5", "--out", out])), 64);
}

#[test]
fn oracle_flags_a_dependent_family() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ys.json");
    fs::write(&input, r#"[{"1":"1","2":"-1"},{"1":"-2","2":"2"}]"#).unwrap();
    let o = twistlab(&[
        "oracle", "crosspolytope", "--input", input.to_str().unwrap(),
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
}
