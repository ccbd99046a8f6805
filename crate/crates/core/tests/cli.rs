//! End-to-end runs of the `irsplan` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

fn irsplan(out: &Path, args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_irsplan"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Data rows of a CSV artifact, preamble stripped.
fn rows(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn coverage_is_deterministic_and_self_describing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["coverage", "--set", "coverage.l_stop=100", "--set", "coverage.l_step=20", "--seed", "5"];
    assert_eq!(irsplan(a.path(), &args), 0);
    assert_eq!(irsplan(b.path(), &args), 0);
    for f in ["coverage.csv", "coverage.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let csv = read(a.path(), "coverage.csv");
    assert!(csv.contains("# seed=5"));
    assert!(csv.lines().any(|l| l.starts_with("# config={\"radio\"")));
    let r = rows(&csv);
    assert_eq!(r.len(), 1 + 6);
    assert_eq!(&r[0][0], "baseline");
    let base: f64 = r[0][2].parse().unwrap();
    assert!((base - 563.0).abs() < 1.0);
    let json: serde_json::Value = serde_json::from_str(&read(a.path(), "coverage.json")).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["seed"], 5);
    assert_eq!(json["config"]["coverage"]["l_stop"], 100.0);
    // wall-clock data lives in the sidecar only
    let side: serde_json::Value = serde_json::from_str(&read(a.path(), "coverage.run.json")).unwrap();
    assert!(side["elapsed_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn coverage_without_elements_matches_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let code = irsplan(
        dir.path(),
        &["coverage", "--set", "irs.elements=0", "--set", "coverage.l_stop=600", "--set", "coverage.l_step=100"],
    );
    assert_eq!(code, 0);
    let r = rows(&read(dir.path(), "coverage.csv"));
    let base: f64 = r[0][2].parse().unwrap();
    for row in &r[1..] {
        let range: f64 = row[2].parse().unwrap();
        assert!((range - base).abs() < 1e-6);
    }
}

#[test]
fn config_file_with_units_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "[coverage]\npower = \"13 dBm\"\nthreshold = \"10 dB\"\nl_stop = 0\n").unwrap();
    let code = irsplan(dir.path(), &["coverage", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "coverage.json")).unwrap();
    let p = json["config"]["coverage"]["power"].as_f64().unwrap();
    assert!((p - 10f64.powf(1.3) * 1e-3).abs() < 1e-12);

    fs::write(&cfg, "[cell]\nusers = \"lots\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_irsplan"))
        .args(["coverage", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cell.users"));
}

#[test]
fn plan_then_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let set = ["--set", "plan.irs_total=12", "--set", "plan.max_rings=2"];
    let mut args = vec!["plan", "--method", "line-search"];
    args.extend(set);
    assert_eq!(irsplan(dir.path(), &args), 0);
    let table = rows(&read(dir.path(), "rings.csv"));
    assert_eq!(&table[0][0], "0");
    let plan_path = dir.path().join("plan.json");

    let val = tempfile::tempdir().unwrap();
    let mc = ["--set", "mc.n_topologies=3", "--set", "mc.n_fading=200", "--seed", "11"];
    let mut vargs = vec!["validate", plan_path.to_str().unwrap()];
    vargs.extend(set);
    vargs.extend(mc);
    assert_eq!(irsplan(val.path(), &vargs), 0);
    let first = read(val.path(), "validation.json");
    assert_eq!(irsplan(val.path(), &vargs), 0);
    assert_eq!(first, read(val.path(), "validation.json"));
    let json: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(json["seed"], 11);
    assert_eq!(json["result"]["mc"]["n_topologies"], 3);

    // a plan for one cell does not validate against another
    let mut bad = vec!["validate", plan_path.to_str().unwrap(), "--set", "cell.radius=300"];
    bad.extend(mc);
    assert_eq!(irsplan(val.path(), &bad), 1);
}

#[test]
fn infeasible_plan_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let code = irsplan(dir.path(), &["plan", "--set", "plan.irs_total=20", "--set", "plan.max_rings=1"]);
    assert_eq!(code, 2);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "plan.json")).unwrap();
    assert_eq!(json["status"], "infeasible");
}

#[test]
fn sweep_rows_per_total_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let code = irsplan(
        dir.path(),
        &["sweep", "--set", "sweep.irs_totals=[0, 6]", "--set", "sweep.line_search_rings=2"],
    );
    assert_eq!(code, 0);
    let r = rows(&read(dir.path(), "sweep.csv"));
    let keys: Vec<(String, String)> = r.iter().map(|x| (x[0].to_string(), x[1].to_string())).collect();
    let want: Vec<(String, String)> = [
        ("0", "ap-equal-power"),
        ("0", "ap-cipc"),
        ("6", "ap-equal-power"),
        ("6", "ap-cipc"),
        ("6", "irs-equal-power"),
        ("6", "irs-mean-cipc"),
        ("6", "line-search"),
        ("6", "algorithm1"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    assert_eq!(keys, want);
}

#[test]
fn bad_arguments_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(irsplan(dir.path(), &["plan", "--method", "simplex"]), 1);
    assert_eq!(irsplan(dir.path(), &["plan", "--set", "no_equals_sign"]), 1);
}
