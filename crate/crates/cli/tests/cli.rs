use std::path::PathBuf;
use std::process::{Command, Output};

fn vdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdp")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_zero_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = vdp(&["solve", "--problem", &config("zero"), "--N", "4", "--Q", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["value"], 0.0);
    for f in ["summary.json", "control.csv", "trajectory.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let saved = std::fs::read(dir.path().join("summary.json")).unwrap();
    assert_eq!(saved, out.stdout);
    let control = std::fs::read_to_string(dir.path().join("control.csv")).unwrap();
    assert_eq!(control.lines().next(), Some("i,t,u_1"));
    assert_eq!(control.lines().count(), 5);
}

#[test]
fn oracle_check_lq() {
    let out = vdp(&["oracle-check", "--problem", &config("lq"), "--N", "4", "--Q", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["dp_value == oracle_value"], true);
    assert_eq!(v["dp_value"], v["oracle_value"]);
    assert_eq!(v["necessity"]["violations"], 0);
    assert_eq!(v["necessity"]["seed"], 0);
}

#[test]
fn capacity_exit_code() {
    let out = vdp(&["solve", "--problem", &config("lq"), "--N", "30", "--Q", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("module=dp") && err.contains("stage=sweep"), "{err}");
}

#[test]
fn memory_budget_from_environment() {
    let run = |budget: &str| {
        Command::new(env!("CARGO_BIN_EXE_vdp"))
            .args(["solve", "--problem", "lq", "--N", "3", "--Q", "3"])
            .env("VDP_MEMORY_BUDGET", budget)
            .output()
            .unwrap()
    };
    assert_eq!(run("39").status.code(), Some(3));
    assert_eq!(run("40").status.code(), Some(0));
    assert_eq!(run("lots").status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kernel\": 1}").unwrap();
    for args in [
        vec!["solve", "--problem", bad.to_str().unwrap(), "--N", "2"],
        vec!["solve", "--problem", "no-such-problem", "--N", "2"],
        vec!["converge", "--problem", "lq", "--N-list", "8,4,16"],
        vec!["solve", "--problem", "lq", "--N", "2", "--workers", "0"],
    ] {
        let out = vdp(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn summaries_identical_across_workers() {
    let runs: Vec<Vec<u8>> = ["1", "2", "4"]
        .iter()
        .map(|w| {
            let out = vdp(&["oracle-check", "--problem", &config("memory_decay"), "--N", "5", "--Q", "3", "--band", "--workers", w, "--seed", "9"]);
            assert_eq!(out.status.code(), Some(0));
            out.stdout
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let gaps: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|w| vdp(&["gap", "--problem", "logistic_memory", "--N-list", "2,4", "--workers", w]).stdout)
        .collect();
    assert_eq!(gaps[0], gaps[1]);
}

#[test]
fn converge_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = vdp(&["converge", "--problem", &config("convergence_linear"), "--N-list", "8,16,32,64", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["reference"], "linear");
    let slope = v["state_order"].as_f64().unwrap();
    assert!((0.9..=1.3).contains(&slope));
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn costmodel_reports_table_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = vdp(&["costmodel", "--problem", "lq", "--N-list", "1,2,3", "--M-list", "2,3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["comparison"]["rows"].as_array().unwrap().len(), 6);
    let inst = v["instrumented"].as_array().unwrap();
    assert_eq!(inst.len(), 3);
    assert_eq!(inst[0]["recursive"]["measured"], 4);
    assert_eq!(inst[0]["recursive"]["equal"], true);
    let csv = std::fs::read_to_string(dir.path().join("costmodel_comparison.csv")).unwrap();
    assert!(csv.starts_with("N,M,recursive_total,closed_form_total,delta\n"));
}
