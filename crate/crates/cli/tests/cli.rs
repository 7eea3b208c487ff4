use std::path::Path;
use std::process::Command;

use remoteop_cli::run_cli;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["remoteop"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = run(args);
    let value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("bad JSON ({e}); stderr: {err}"));
    (code, value)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn identity_json(dim: usize) -> String {
    let rows: Vec<Vec<[f64; 2]>> = (0..dim)
        .map(|r| (0..dim).map(|c| [if r == c { 1.0 } else { 0.0 }, 0.0]).collect())
        .collect();
    serde_json::json!({ "dim": dim, "entries": rows }).to_string()
}

fn assert_all_fidelity_one(report: &Value) {
    for b in report["branches"].as_array().unwrap() {
        let f = b["fidelity"].as_f64().unwrap();
        assert!((1.0 - f).abs() < 1e-9, "branch {} fidelity {f}", b["branch_id"]);
    }
}

#[test]
fn hpv_random_run_has_four_perfect_branches() {
    let (code, report) = run_json(&[
        "run", "--protocol", "hpv", "--d", "0", "--random-op", "--seed", "7", "--random-state", "--seed", "9",
        "--enumerate",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["branches"].as_array().unwrap().len(), 4);
    assert_all_fidelity_one(&report);
    assert_eq!(report["ledger"]["ebits"], 1);
}

#[test]
fn hybrid_one_one_enumerates_sixty_four_branches() {
    let (code, report) = run_json(&[
        "run", "--protocol", "hybrid", "--n", "1", "--m", "1", "--random-op", "--seed", "1", "--random-state",
        "--seed", "2",
    ]);
    assert_eq!(code, 0);
    let branches = report["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 64);
    assert_eq!(report["ledger"]["ebits"], 3);
    let total: f64 = branches.iter().map(|b| b["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);
    assert_all_fidelity_one(&report);
}

#[test]
fn identity_operator_from_perm_and_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let blocks = format!("[{}, {}]", identity_json(2), identity_json(2));
    let blocks_file = write(dir.path(), "blocks.json", &blocks);
    let (code, report) = run_json(&[
        "run", "--protocol", "hybrid", "--perm", "1,2", "--blocks-file", &blocks_file, "--basis", "3",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["N"], 1);
    assert_eq!(report["M"], 1);
    assert_all_fidelity_one(&report);
}

#[test]
fn wang_and_bqst_runs_succeed() {
    let (code, report) = run_json(&[
        "run", "--protocol", "wang", "--n", "2", "--random-op", "--op-seed", "4", "--random-state", "--state-seed", "5",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["branches"].as_array().unwrap().len(), 16);
    assert_all_fidelity_one(&report);

    let (code, report) = run_json(&[
        "run", "--protocol", "bqst", "--m", "1", "--random-op", "--seed", "4", "--basis", "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["ledger"]["ebits"], 2);
    assert_all_fidelity_one(&report);
}

#[test]
fn sampling_is_seeded() {
    let args = [
        "run", "--protocol", "hybrid", "--n", "1", "--m", "1", "--random-op", "--seed", "3", "--random-state",
        "--seed", "4", "--sample", "20", "--seed", "5",
    ];
    let (code, report) = run_json(&args);
    assert_eq!(code, 0);
    assert_eq!(report["branches"].as_array().unwrap().len(), 20);
    assert_eq!(run(&args).1, run(&args).1);
    let other = run(&[
        "run", "--protocol", "hybrid", "--n", "1", "--m", "1", "--op-seed", "3", "--random-op", "--state-seed", "4",
        "--random-state", "--sample", "20", "--sample-seed", "6",
    ]);
    assert_ne!(run(&args).1, other.1);
}

#[test]
fn same_seeds_give_identical_reports() {
    let args = [
        "run", "--protocol", "hybrid", "--n", "2", "--m", "0", "--random-op", "--seed", "11", "--random-state",
        "--seed", "12",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.0, 0);
    assert_eq!(first.1, second.1);
}

#[test]
fn resources_match_closed_forms() {
    let (code, hybrid) = run_json(&["resources", "--protocol", "hybrid", "--n", "2", "--m", "1"]);
    assert_eq!(code, 0);
    assert_eq!((hybrid["ebits"].as_u64(), hybrid["cbits"].as_u64()), (Some(4), Some(8)));
    let (_, hpv) = run_json(&["resources", "--protocol", "hpv", "--n", "1", "--m", "0"]);
    assert_eq!((hpv["ebits"].as_u64(), hpv["cbits"].as_u64()), (Some(1), Some(2)));
    let (_, bqst) = run_json(&["resources", "--protocol", "bqst", "--n", "1", "--m", "1"]);
    assert_eq!((bqst["ebits"].as_u64(), bqst["cbits"].as_u64()), (Some(4), Some(8)));
}

#[test]
fn prediction_equals_simulated_ledger() {
    for n in 0..=3usize {
        for m in 0..=(3 - n) {
            if n + m == 0 {
                continue;
            }
            let (ns, ms) = (n.to_string(), m.to_string());
            let (_, predicted) = run_json(&["resources", "--protocol", "hybrid", "--n", &ns, "--m", &ms]);
            let (code, report) = run_json(&[
                "run", "--protocol", "hybrid", "--n", &ns, "--m", &ms, "--random-op", "--seed", "21", "--basis", "0",
                "--sample", "2", "--seed", "22",
            ]);
            assert_eq!(code, 0, "N={n} M={m}");
            let ledger = &report["ledger"];
            let cbits = ledger["cbits_b2a"].as_u64().unwrap() + ledger["cbits_a2b"].as_u64().unwrap();
            assert_eq!(ledger["ebits"], predicted["ebits"], "N={n} M={m}");
            assert_eq!(Some(cbits), predicted["cbits"].as_u64(), "N={n} M={m}");
            assert_eq!(ledger["setup_bits"], predicted["setup_bits"], "N={n} M={m}");
        }
    }
}

#[test]
fn classify_identity_prefers_all_permutation_split() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "id.json", &identity_json(4));
    let (code, splits) = run_json(&["classify", &file]);
    assert_eq!(code, 0);
    let best = &splits.as_array().unwrap()[0];
    assert_eq!(best["ebit_cost"], 2);
    assert_eq!((best["N"].as_u64(), best["M"].as_u64()), (Some(2), Some(0)));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"dim": 2, "entries": [[[1, 0]]]}"#);
    assert_eq!(run(&["classify", &bad]).0, 2);
    let garbage = write(dir.path(), "garbage.json", "not json");
    assert_eq!(run(&["classify", &garbage]).0, 2);
    assert_eq!(run(&["classify", "/nonexistent/matrix.json"]).0, 2);
    assert_eq!(run(&["run", "--protocol", "hpv", "--random-op", "--basis", "0"]).0, 2);
    assert_eq!(run(&["run", "--protocol", "teleport"]).0, 2);
    let (code, _, err) = run(&["run", "--protocol", "hybrid", "--op-json", "{", "--basis", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("configuration error"));
}

#[test]
fn state_size_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let state = write(dir.path(), "s.json", r#"{"num_qubits": 1, "amplitudes": [[1, 0], [0, 0]]}"#);
    let (code, _, _) = run(&[
        "run", "--protocol", "hybrid", "--n", "1", "--m", "1", "--random-op", "--seed", "1", "--state-file", &state,
    ]);
    assert_eq!(code, 2);
}

#[test]
fn tolerance_gates_exit_code() {
    let base = [
        "run", "--protocol", "hybrid", "--n", "1", "--m", "1", "--random-op", "--seed", "8", "--random-state",
        "--seed", "9",
    ];
    let mut strict = base.to_vec();
    strict.extend(["--tol", "-1"]);
    assert_eq!(run(&strict).0, 2);
    let mut loose = base.to_vec();
    loose.extend(["--tol", "0.5"]);
    assert_eq!(run(&loose).0, 0);
}

#[test]
fn verify_single_branch_and_all_branches() {
    let (code, one) = run_json(&[
        "verify", "--n", "1", "--m", "1", "--random-op", "--seed", "5", "--random-state", "--seed", "6", "--branch",
        "37",
    ]);
    assert_eq!(code, 0);
    assert!(one["checkpoints"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let (code, all) = run_json(&["verify", "--n", "1", "--m", "1", "--random-op", "--seed", "5", "--basis", "2"]);
    assert_eq!(code, 0);
    assert_eq!(all.as_array().unwrap().len(), 64);
    assert_eq!(
        run(&["verify", "--n", "1", "--m", "1", "--random-op", "--seed", "5", "--basis", "2", "--branch", "64"]).0,
        2
    );
}

#[test]
fn files_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("branches.csv");
    let (code, stdout, _) = run(&[
        "run", "--protocol", "hpv", "--d", "1", "--random-op", "--seed", "2", "--basis", "1", "--out",
        out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["protocol"], "hpv");
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("branch_id,b,a,teleports,probability,fidelity"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn op_file_round_trip_through_hybrid() {
    let dir = tempfile::tempdir().unwrap();
    let op = r#"{"variant": "hpv", "d": 1, "u": [[0.6, 0.8], [0.0, 1.0]]}"#;
    let file = write(dir.path(), "op.json", op);
    for protocol in ["hpv", "hybrid"] {
        let (code, report) = run_json(&["run", "--protocol", protocol, "--op-file", &file, "--basis", "0"]);
        assert_eq!(code, 0, "{protocol}");
        assert_all_fidelity_one(&report);
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_remoteop");
    let ok = Command::new(bin).args(["resources", "--protocol", "wang", "--n", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["ebits"], 2);

    let bad = Command::new(bin).args(["run", "--protocol", "hpv"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());

    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));

    let env_tol = Command::new(bin)
        .args(["run", "--protocol", "hpv", "--d", "0", "--random-op", "--seed", "1", "--basis", "0"])
        .env("REMOTEOP_TOL", "0.25")
        .output()
        .unwrap();
    assert_eq!(env_tol.status.code(), Some(0));
}
