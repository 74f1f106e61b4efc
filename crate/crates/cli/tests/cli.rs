use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ace_core::corpus::InstanceResult;
use ace_core::doc::{FeasibilityDoc, ReducedDoc, SolutionDoc, StageSolutionDoc, ValidationDoc, VerifyDoc};
use ace_core::game::NumLit;
use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(format!("{name}.json"))
}

fn ace(args: &[&str]) -> Output {
    ace_env(args, &[])
}

fn ace_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ace"));
    cmd.args(args).env_remove("ACE_MAX_NODES");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run ace")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_good_and_bad() {
    let out = ace(&["validate", path(&corpus("minimal"))]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "valid");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(corpus("minimal"))
        .unwrap()
        .replace("\"s\": 1", "\"s\": \"1/2\"");
    std::fs::write(&bad, text).unwrap();
    let out = ace(&["validate", path(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("invalid"));
    let out = ace(&["--json", "validate", path(&bad)]);
    let doc: ValidationDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!doc.valid);
    assert_eq!(doc.violations[0].kind, "probability");
}

#[test]
fn infeasible_game_exits_one() {
    let out = ace(&["solve", path(&corpus("infeasible"))]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout(&out).trim(), "infeasible");
    let out = ace(&["--json", "solve", path(&corpus("infeasible"))]);
    assert_eq!(code(&out), 1);
    let doc: SolutionDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc.status, "infeasible");
}

#[test]
fn usage_errors_exit_two() {
    let game = corpus("minimal");
    assert_eq!(code(&ace(&["solve", path(&game), "--bogus"])), 2);
    assert_eq!(code(&ace(&["solve", path(&game), "--kind", "nash"])), 2);
    assert_eq!(code(&ace(&["approx", path(&game), "--eps", "-1"])), 2);
    assert_eq!(
        code(&ace(&["approx", path(&game), "--eps", "0.1", "--mode", "sideways"])),
        2
    );
    assert_eq!(code(&ace(&["solve", "/nonexistent/game.json"])), 2);
    assert_eq!(code(&ace(&[])), 2);
    assert_eq!(code(&ace_env(&["solve", path(&game)], &[("ACE_MAX_NODES", "lots")])), 2);
}

#[test]
fn node_cap_from_environment() {
    let game = corpus("dead_end");
    let out = ace_env(&["solve", path(&game)], &[("ACE_MAX_NODES", "5")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("size"));
    assert_eq!(code(&ace_env(&["solve", path(&game)], &[("ACE_MAX_NODES", "1000")])), 0);
}

#[test]
fn feasibility_json_drops_dead_end_action() {
    let out = ace(&["--json", "feasibility", path(&corpus("dead_end"))]);
    assert_eq!(code(&out), 0);
    let doc: FeasibilityDoc = serde_json::from_slice(&out.stdout).unwrap();
    let root = doc.sets.iter().find(|e| e.h == 1).unwrap();
    assert!(!root
        .actions
        .contains(&vec!["shortcut".to_string(), "shortcut".to_string()]));
    assert_eq!(root.actions.len(), 3);
    let again: FeasibilityDoc = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(again, doc);

    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("sets.json");
    let out = ace(&["feasibility", path(&corpus("dead_end")), "--dump-sets", path(&dump)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("|FS_h|: 1 3 3"));
    let dumped: FeasibilityDoc = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(dumped, doc);
    assert!(dumped.sets.iter().all(|e| e.lattice.len() == 2));
}

#[test]
fn reduce_writes_augmented_game() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("reduced.json");
    let out = ace(&["reduce", path(&corpus("non_product")), "--out", path(&file)]);
    assert_eq!(code(&out), 0);
    let doc: ReducedDoc = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert!(doc.augmented);
    assert_eq!(doc.non_product_states, 2);
    assert_eq!(doc.initial_state, "(s,[0,0])");
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let game = corpus("two_state_resource");
    for (kind, exact) in [("cce", false), ("ce", false), ("cce", true)] {
        let file = dir.path().join(format!("{kind}-{exact}.json"));
        let mut args = vec!["solve", path(&game), "--kind", kind, "-o", path(&file)];
        if exact {
            args.push("--exact");
        }
        assert_eq!(code(&ace(&args)), 0);
        let text = std::fs::read_to_string(&file).unwrap();
        let doc: SolutionDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
        assert_eq!(doc.exact, exact);

        let mut args = vec!["--json", "verify", path(&game), path(&file), "--rollouts", "500"];
        if exact {
            args.push("--exact");
        }
        let out = ace(&args);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
        let report: VerifyDoc = serde_json::from_slice(&out.stdout).unwrap();
        assert!(report.passed && report.support_ok);
        assert_eq!(report.oracle, "match");
    }
}

#[test]
fn corrupted_policy_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("solution.json");
    let game = corpus("non_product");
    assert_eq!(code(&ace(&["solve", path(&game), "--exact", "-o", path(&file)])), 0);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    // Move the root distribution onto the excluded joint action.
    doc["policy"][0]["actions"] = serde_json::json!([{"action": ["hi", "hi"], "prob": "1"}]);
    std::fs::write(&file, doc.to_string()).unwrap();
    let out = ace(&[
        "--json",
        "verify",
        path(&game),
        path(&file),
        "--exact",
        "--rollouts",
        "200",
    ]);
    assert_eq!(code(&out), 1);
    let report: VerifyDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!report.support_ok);
    assert_eq!(report.max_deviation_gap, None);
    assert!(report.rollouts.violations > 0);
}

#[test]
fn perturbed_values_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("solution.json");
    let game = corpus("prisoners_dilemma");
    assert_eq!(code(&ace(&["solve", path(&game), "-o", path(&file)])), 0);
    let mut doc: SolutionDoc = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    doc.policy[0].value[0] = NumLit::Text("1000".into());
    std::fs::write(&file, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = ace(&["--json", "verify", path(&game), path(&file), "--rollouts", "200"]);
    assert_eq!(code(&out), 1);
    let report: VerifyDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.consistency_gap.unwrap() > report.value_tolerance);
}

#[test]
fn approx_then_verify_on_continuous_costs() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("approx.json");
    let game = corpus("uniform_costs");
    let out = ace(&["approx", path(&game), "--eps", "0.1", "-o", path(&file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: SolutionDoc = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    let approx = doc.approximation.as_ref().unwrap();
    assert_eq!(approx.mode, "additive");
    assert_eq!(approx.ell, vec!["1/30".to_string()]);
    let out = ace(&["--json", "verify", path(&game), path(&file), "--rollouts", "1000"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let report: VerifyDoc = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.rollouts.allowance, vec!["1/10".to_string()]);
}

#[test]
fn exact_solve_rejects_continuous_costs() {
    let out = ace(&["solve", path(&corpus("uniform_costs"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn stage_lp_json() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("matrix.json");
    std::fs::write(
        &file,
        r#"{"actions": [["c", "d"], ["c", "d"]], "utilities": [[3, 3], [0, 5], [5, 0], [1, 1]]}"#,
    )
    .unwrap();
    for kind in ["cce", "ce"] {
        let out = ace(&["--json", "stage-lp", path(&file), "--kind", kind, "--exact"]);
        assert_eq!(code(&out), 0);
        let doc: StageSolutionDoc = serde_json::from_slice(&out.stdout).unwrap();
        assert!(doc.max_deviation_gain <= 0.0);
        assert_eq!(doc.distribution.len(), 1);
        assert_eq!(doc.distribution[0].action, vec!["d".to_string(), "d".to_string()]);
    }
}

#[test]
fn corpus_is_deterministic() {
    let first = ace(&["corpus", "--seed", "7", "--rollouts", "300"]);
    let second = ace(&["corpus", "--seed", "7", "--rollouts", "300"]);
    assert_eq!(code(&first), 0, "{}", stdout(&first));
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).contains("11/11 instances pass"));

    let json = ace(&["--json", "corpus", "--seed", "7", "--rollouts", "300"]);
    let results: Vec<InstanceResult> = serde_json::from_slice(&json.stdout).unwrap();
    assert!(results.iter().all(|r| r.passed));
    assert_eq!(
        json.stdout,
        ace(&["--json", "corpus", "--seed", "7", "--rollouts", "300"]).stdout
    );
}
