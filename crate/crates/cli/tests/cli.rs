//! End-to-end runs of the `sweepcert` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sweepcert"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("SWEEPCERT_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_input(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(example("five_spring.json")).unwrap()).unwrap();
    edit(&mut doc);
    let path = dir.join("input.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

#[test]
fn validate_reports_ranks() {
    let out = run(&["validate", "--input", example("five_spring.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["validation"]["rank_d"], 3);
    assert_eq!(v["validation"]["rank_dtr"], 1);
    assert!(v.get("process").is_none());
}

#[test]
fn zero_loading_location_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_input(dir.path(), |d| d["R"] = serde_json::json!([0, 0, 0, 0, 0]));
    let out = run(&["report", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("network: loading degenerate"), "{err}");
}

#[test]
fn malformed_documents_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write_input(dir.path(), |d| d["D"][2] = serde_json::json!([0, -1, 1]));
    let out = run(&["validate", "--input", ragged.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("D row 3"));
    let order = write_input(dir.path(), |d| d["c_minus"][0] = serde_json::json!(5));
    let out = run(&["validate", "--input", order.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of order"));
    let out = run(&["validate", "--input", "/nonexistent/input.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn construct_emits_the_process() {
    let out = run(&["construct", "--input", example("five_spring.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let p = &json(&out)["process"];
    assert_eq!(p["d"], 3);
    assert_eq!(p["W"].as_array().unwrap().len(), 3);
    assert_eq!(p["barL"].as_array().unwrap().len(), 3);
    assert_eq!(p["N"].as_array().unwrap().len(), 5);
    assert!(p["invariant_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn enumerate_lists_eight_scenarios() {
    let out = run(&["enumerate", "--input", example("five_spring.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let scenarios = v["scenarios"].as_array().unwrap();
    assert_eq!(scenarios.len(), 8);
    assert_eq!(scenarios[7]["i0"], serde_json::json!(["(+,2)", "(+,3)", "(+,4)"]));
    assert_eq!(scenarios[0]["families"], serde_json::json!(["I1={(-,3)}", "I2={(+,3)}"]));
    assert_eq!(v["vertices"][7]["verdict"], "feasible");
    assert!(v["certificates"].as_array().unwrap().is_empty());
}

#[test]
fn certify_unit_limits_has_no_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "certify",
        "--input",
        example("five_spring_unit_limits.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let md = std::fs::read_to_string(dir.path().join("certify.md")).unwrap();
    assert!(md.contains("c3+ + c4+ > c1+"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("certify.json")).unwrap()).unwrap();
    assert_eq!(v["exit_code"], 2);
    assert_eq!(v["rejected"].as_array().unwrap().len(), 8);
    assert_eq!(v["eps0"][0]["eps0"].as_f64().unwrap(), 0.6f64.sqrt());
}

#[test]
fn scenario_filter_and_direction() {
    let input = example("five_spring.json");
    let out = run(&["certify", "--input", input.to_str().unwrap(), "--scenario", "1-3"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["scenarios"].as_array().unwrap().len(), 8);
    assert_eq!(v["eps0"].as_array().unwrap().len(), 3);
    let out = run(&["certify", "--input", input.to_str().unwrap(), "--scenario", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["certificates"][0]["kind"], "Vertex");

    let out = run(&["enumerate", "--input", input.to_str().unwrap(), "--direction", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["direction"], "-");
    let first: Vec<String> = v["scenarios"][0]["i0"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    assert!(first.iter().all(|s| s.starts_with("(-")), "{first:?}");

    let out = run(&["certify", "--input", input.to_str().unwrap(), "--scenario", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_trajectory_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--input",
        example("five_spring.json").to_str().unwrap(),
        "--scenario",
        "8",
        "--dt",
        "0.01",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("simulate.json")).unwrap()).unwrap();
    let sim = &v["simulations"][0];
    assert_eq!(sim["verdict"], "pass");
    assert!(sim["arrival_time"].as_f64().unwrap() <= sim["tau_d"].as_f64().unwrap());
    assert_eq!(sim["lyapunov"]["violations"], 0);
    let csv = std::fs::read_to_string(dir.path().join("trajectory_scenario_8.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y1,y2,y3,y4,y5,s1,s2,s3,s4,s5,V"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    for (got, want) in last[6..11].iter().zip([2.0, 1.0, 1.0, 1.0, 2.0]) {
        assert!((got - want).abs() < 1e-6);
    }
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let status = bin()
            .args([
                "report",
                "--input",
                example("five_spring.json").to_str().unwrap(),
                "--simulate",
                "--dt",
                "0.01",
                "--out",
                dir.path().to_str().unwrap(),
            ])
            .env("SWEEPCERT_THREADS", threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        let files: Vec<Vec<u8>> = ["report.json", "report.md", "trajectory_scenario_8.csv"]
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["report"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_thread_count_exits_one() {
    let out = bin()
        .args(["validate", "--input", example("five_spring.json").to_str().unwrap()])
        .env("SWEEPCERT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SWEEPCERT_THREADS"));
}

#[test]
fn schema_matches_the_input_document() {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/network.schema.json")).unwrap(),
    )
    .unwrap();
    let props: Vec<&str> = schema["properties"].as_object().unwrap().keys().map(String::as_str).collect();
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(example("five_spring_unit_limits.json")).unwrap()).unwrap();
    let mut keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    let mut props_sorted = props.clone();
    keys.sort_unstable();
    props_sorted.sort_unstable();
    assert_eq!(keys, props_sorted);
    let required: Vec<&str> = schema["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(!required.contains(&"period"));
    assert_eq!(required.len(), props.len() - 1);
}
