use super::*;

fn cfg(overrides: &[&str]) -> Result<ExperimentConfig> {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::from_toml("", &o)
}

#[test]
fn empty_config_is_the_reference_setup() {
    let c = cfg(&[]).unwrap();
    assert_eq!(c.cell.radius, 250.0);
    assert_eq!(c.cell.users, 500);
    assert_eq!(c.irs.elements, 2000);
    assert_eq!(c.radio.slots, 20);
    assert_eq!(c.radio.sub_bands, 25);
    assert!((c.radio.slot_duration() - 0.5e-3).abs() < 1e-15);
    assert_eq!(c.outage.target_nop, 0.95);
    assert_eq!(c.plan.method, Method::LineSearch);
}

#[test]
fn overrides_and_unit_suffixes() {
    let c = cfg(&[
        "cell.users=300",
        "cell.radius = 200",
        "coverage.power=20dBm",
        "coverage.threshold=3 dB",
        "radio.noise_density=-170dBm/Hz",
        "plan.method=\"algorithm1\"",
        "mc.element_draws=exact",
    ])
    .unwrap();
    assert_eq!(c.cell.users, 300);
    assert_eq!(c.cell.radius, 200.0);
    assert!((c.coverage.power - 0.1).abs() < 1e-15);
    assert!((c.coverage.threshold - 10f64.powf(0.3)).abs() < 1e-12);
    assert!((c.radio.noise_density - 1e-20).abs() < 1e-32);
    assert_eq!(c.plan.method, Method::Algorithm1);
    assert_eq!(c.mc.element_draws, crate::simulation::ElementDraws::Exact);
}

#[test]
fn config_errors_name_the_field_or_line() {
    let e = cfg(&["cell.users=many"]).unwrap_err().to_string();
    assert!(e.contains("cell.users"), "{e}");
    let e = cfg(&["cell.colour=1"]).unwrap_err().to_string();
    assert!(e.contains("colour"), "{e}");
    let e = ExperimentConfig::from_toml("[cell]\nradius = 250\nusers = = 3\n", &[])
        .unwrap_err()
        .to_string();
    assert!(e.contains("line 3"), "{e}");
    let e = cfg(&["coverage.power=x dBm"]).unwrap_err().to_string();
    assert!(e.contains("coverage.power"), "{e}");
    assert!(cfg(&["outage.target_nop=1.5"]).is_err());
    assert!(cfg(&["plan.method=ap-cipc"]).is_err());
    assert!(cfg(&["nonsense"]).is_err());
}

#[test]
fn level_parser() {
    assert_eq!(parse_level("line-search"), Ok(None));
    assert_eq!(parse_level("10 dB"), Ok(Some(10.0)));
    assert!((parse_level("0dBm").unwrap().unwrap() - 1e-3).abs() < 1e-18);
    assert!(parse_level("abc dB").is_err());
}

#[test]
fn coverage_without_elements_is_flat() {
    let mut c = cfg(&["irs.elements=0", "coverage.l_stop=100", "coverage.l_step=25"]).unwrap();
    c.validate().unwrap();
    let res = coverage_sweep(&c).unwrap();
    assert_eq!(res.rows[0].kind, "baseline");
    assert!((res.baseline_m - 563.0).abs() < 1.0);
    assert_eq!(res.rows.len(), 1 + 5);
    for r in &res.rows[1..] {
        assert!(r.excess_m.abs() < 1e-6);
    }
    c.irs.elements = 2000;
    let res = coverage_sweep(&c).unwrap();
    assert!(res.rows[1..].iter().all(|r| r.excess_m > 0.0));
}

#[test]
fn plan_writes_ring_table_and_infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(&["plan.irs_total=5"]).unwrap();
    assert_eq!(cmd_plan(&c, dir.path()).unwrap(), Status::Ok);
    let table = fs::read_to_string(dir.path().join("rings.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("# irsplan plan schema_version=1"));
    assert!(lines[2].starts_with("# config={"));
    assert!(lines[3].starts_with("ring,r_outer_m,r_inner_m,irs_count"));
    assert_eq!(lines.len(), 4 + 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["result"]["plan"]["irs_counts"], serde_json::json!([5]));

    let bad = cfg(&["plan.irs_total=20", "plan.max_rings=1"]).unwrap();
    assert_eq!(cmd_plan(&bad, dir.path()).unwrap(), Status::Infeasible);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "infeasible");
    assert!(report["result"]["reasons"][0].as_str().unwrap().starts_with("near_ap_max"));
}

#[test]
fn sweep_without_irs_keeps_only_baselines() {
    let c = cfg(&["sweep.irs_totals=[0]"]).unwrap();
    let rows = sweep(&c).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(names, ["ap-equal-power", "ap-cipc"]);
}

#[test]
fn sweep_is_monotone_per_method() {
    let c = cfg(&["sweep.irs_totals=[12, 4, 8]", "sweep.line_search_rings=2"]).unwrap();
    let rows = sweep(&c).unwrap();
    assert_eq!(rows.len(), 3 * 6);
    assert_eq!(rows[0].irs_total, 4);
    for m in Method::ALL.iter().filter(|m| m.is_planner()) {
        let nu: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == m.name())
            .map(|r| r.nu_bar.unwrap())
            .collect();
        assert!(nu.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{}: {nu:?}", m.name());
    }
    for r in rows.iter().filter(|r| r.method.starts_with("irs-")) {
        assert!(r.repo_defined);
    }
}

#[test]
fn validate_rejects_plans_for_another_cell() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(&["plan.irs_total=8"]).unwrap();
    cmd_plan(&c, dir.path()).unwrap();
    let path = dir.path().join("plan.json");
    let ok = load_plan(&c, &path).unwrap();
    assert_eq!(ok.plan.total_irs(), 8);
    let other = cfg(&["cell.radius=200"]).unwrap();
    let e = load_plan(&other, &path).unwrap_err().to_string();
    assert!(e.contains("plan/config mismatch"), "{e}");
}

#[test]
fn cli_flags_resolve_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = main_with_args([
        "irsplan", "plan", "--out", out, "--set", "plan.irs_total=20", "--set", "plan.max_rings=1",
    ]);
    assert_eq!(code, 2);
    assert_eq!(main_with_args(["irsplan", "plan", "--out", out, "--set", "cell.radius=-1"]), 1);
    assert_eq!(main_with_args(["irsplan", "bogus"]), 1);
    let cli = Cli::try_parse_from([
        "irsplan", "sweep", "--seed", "9", "--method", "algorithm1", "--full-scale",
    ])
    .unwrap();
    let c = cli.resolve().unwrap();
    assert_eq!(c.mc.seed, 9);
    assert_eq!(c.sweep.methods, vec![Method::Algorithm1]);
    assert_eq!(c.mc.n_fading, 1_000_000);
}
