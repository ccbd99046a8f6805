//! Command-line experiments: coverage, plan, sweep and validate.
//!
//! A run is described by one TOML file plus `--set key=value` overrides.
//! Strings with a `dB`, `dBm` or `dBm/Hz` suffix are converted to linear
//! units while loading. Every data file embeds the resolved configuration and
//! seed; wall-clock information goes to a `<command>.run.json` sidecar.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, dbm_to_watts, IrsSpec, OutageSpec, RadioConfig};
use crate::error::{Error, Result};
use crate::geometry::{mean_users_per_sector, validate_plan, CellConfig, RingPlan};
use crate::planner::{coverage_range, PlanResult, Planner, SearchGrid};
use crate::powerctl::{
    benchmark_cipc, benchmark_equal_power, benchmark_irs_equal_power, benchmark_irs_mean_cipc, EnergyModel,
    RegionId,
};
use crate::simulation::{validate_plan_mc, McConfig, ValidationReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Placement and power-control schemes known to the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LineSearch,
    Algorithm1,
    ApEqualPower,
    ApCipc,
    IrsEqualPower,
    IrsMeanCipc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ApEqualPower,
        Method::ApCipc,
        Method::IrsEqualPower,
        Method::IrsMeanCipc,
        Method::LineSearch,
        Method::Algorithm1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::LineSearch => "line-search",
            Method::Algorithm1 => "algorithm1",
            Method::ApEqualPower => "ap-equal-power",
            Method::ApCipc => "ap-cipc",
            Method::IrsEqualPower => "irs-equal-power",
            Method::IrsMeanCipc => "irs-mean-cipc",
        }
    }

    fn is_planner(self) -> bool {
        matches!(self, Method::LineSearch | Method::Algorithm1)
    }

    fn uses_irs(self) -> bool {
        !matches!(self, Method::ApEqualPower | Method::ApCipc)
    }
}

/// Sweep of the AP-IRS distance for the coverage study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    /// AP transmit power, W.
    pub power: f64,
    /// Mean-SNR threshold, linear.
    pub threshold: f64,
    pub l_start: f64,
    pub l_stop: f64,
    pub l_step: f64,
}

impl Default for CoverageSection {
    fn default() -> Self {
        Self {
            power: dbm_to_watts(10.0),
            threshold: db_to_linear(10.0),
            l_start: 0.0,
            l_stop: 600.0,
            l_step: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub method: Method,
    pub irs_total: u32,
    /// `I` for the line search, `I_max` for algorithm1.
    pub max_rings: usize,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            method: Method::LineSearch,
            irs_total: 100,
            max_rings: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub irs_totals: Vec<u32>,
    pub methods: Vec<Method>,
    /// Rings allowed to the line search.
    pub line_search_rings: usize,
    /// Rings allowed to algorithm1.
    pub algorithm1_rings: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            irs_totals: (1..=10).map(|k| 10 * k).collect(),
            methods: Method::ALL.to_vec(),
            line_search_rings: 3,
            algorithm1_rings: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Plan JSON written by `plan`. Without it the `[plan]` section is run first.
    pub plan: Option<PathBuf>,
}

/// Everything a run depends on. Missing fields take the reference setup.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub radio: RadioConfig,
    pub cell: CellConfig,
    pub irs: IrsSpec,
    pub outage: OutageSpec,
    pub mc: McConfig,
    pub grid: SearchGrid,
    pub coverage: CoverageSection,
    pub plan: PlanSection,
    pub sweep: SweepSection,
    pub validate: ValidateSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.cell.validate()?;
        OutageSpec::new(self.outage.rate, self.outage.target_nop)
            .map_err(|e| Error::Config(format!("outage: {e}")))?;
        self.mc.validate()?;
        self.grid.validate()?;
        let c = &self.coverage;
        if !(c.power > 0.0 && c.threshold > 0.0) {
            return Err(Error::Config("coverage.power and coverage.threshold must be > 0".into()));
        }
        if !(c.l_step > 0.0 && c.l_start >= 0.0 && c.l_stop >= c.l_start && c.l_stop.is_finite()) {
            return Err(Error::Config(format!(
                "coverage range must satisfy 0 <= l_start <= l_stop and l_step > 0, got {} {} {}",
                c.l_start, c.l_stop, c.l_step
            )));
        }
        if !self.plan.method.is_planner() {
            return Err(Error::Config(format!(
                "plan.method must be line-search or algorithm1, got {}",
                self.plan.method.name()
            )));
        }
        if self.plan.max_rings == 0 || self.sweep.line_search_rings == 0 || self.sweep.algorithm1_rings == 0 {
            return Err(Error::Config("ring limits must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses TOML text, applies `key=value` overrides and checks the result.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut value = toml::Value::Table(table);
        convert_units(&mut value, "")?;
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("field `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides).map_err(|e| match (e, path) {
            (Error::Config(msg), Some(p)) => Error::Config(format!("{}: {msg}", p.display())),
            (e, _) => e,
        })
    }

    pub fn model(&self) -> Result<EnergyModel> {
        EnergyModel::new(&self.radio, &self.cell, &self.irs, self.outage.target_nop)
    }
}

/// Sets `a.b.c = value`, creating tables on the way. The value is read as a
/// TOML literal and falls back to a plain string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Replaces `"<x> dB"`, `"<x> dBm"` and `"<x> dBm/Hz"` strings by linear values.
fn convert_units(value: &mut toml::Value, path: &str) -> Result<()> {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t.iter_mut() {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                convert_units(v, &p)?;
            }
        }
        toml::Value::Array(a) => {
            for v in a.iter_mut() {
                convert_units(v, path)?;
            }
        }
        toml::Value::String(s) => {
            if let Some(x) = parse_level(s).transpose() {
                let x = x.map_err(|msg| Error::Config(format!("field `{path}`: {msg}")))?;
                *value = toml::Value::Float(x);
            }
        }
        _ => {}
    }
    Ok(())
}

/// `Ok(None)` when `s` carries no level suffix.
pub fn parse_level(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    let (num, convert): (&str, fn(f64) -> f64) = if let Some(n) = s.strip_suffix("dBm/Hz") {
        (n, dbm_to_watts)
    } else if let Some(n) = s.strip_suffix("dBm") {
        (n, dbm_to_watts)
    } else if let Some(n) = s.strip_suffix("dB") {
        (n, db_to_linear)
    } else {
        return Ok(None);
    };
    let x: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot read `{s}` as a level"))?;
    Ok(Some(convert(x)))
}

#[derive(Debug, Parser)]
#[command(name = "irsplan", version, about = "Multi-IRS ring placement and power control experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. `cell.users=300` or `coverage.power=13dBm`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Monte Carlo seed (overrides `mc.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Planner for `plan` and `validate`; restricts `sweep` to one method.
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// 1000 topologies with 10^6 fading draws per UE.
    #[arg(long, global = true)]
    pub full_scale: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Coverage range against the AP-IRS distance.
    Coverage,
    /// Place IRSs and split the energy budget.
    Plan,
    /// Common throughput of every method over a list of IRS totals.
    Sweep,
    /// Monte Carlo check of a plan.
    Validate {
        /// Plan JSON written by `plan` (overrides `validate.plan`).
        plan: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coverage => "coverage",
            Command::Plan => "plan",
            Command::Sweep => "sweep",
            Command::Validate { .. } => "validate",
        }
    }
}

impl Cli {
    /// Resolved configuration after file, overrides and flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref(), &self.set)?;
        if let Some(seed) = self.seed {
            cfg.mc.seed = seed;
        }
        if self.full_scale {
            cfg.mc = cfg.mc.full_scale();
        }
        if let Some(m) = self.method {
            match self.command {
                Command::Sweep => cfg.sweep.methods = vec![m],
                _ => cfg.plan.method = m,
            }
        }
        if let Command::Validate { plan: Some(p) } = &self.command {
            cfg.validate.plan = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Infeasible,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Infeasible => 2,
        }
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(s) => s.code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let cfg = cli.resolve()?;
    fs::create_dir_all(&cli.out)?;
    let status = match &cli.command {
        Command::Coverage => cmd_coverage(&cfg, &cli.out).map(|_| Status::Ok),
        Command::Plan => cmd_plan(&cfg, &cli.out),
        Command::Sweep => cmd_sweep(&cfg, &cli.out).map(|_| Status::Ok),
        Command::Validate { .. } => cmd_validate(&cfg, &cli.out),
    }?;
    let sidecar = RunInfo {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        elapsed_s: clock.elapsed().as_secs_f64(),
        exit_code: status.code(),
    };
    write_json(&cli.out.join(format!("{}.run.json", cli.command.name())), &sidecar)?;
    Ok(status)
}

#[derive(Debug, Serialize)]
struct RunInfo {
    command: String,
    version: String,
    started_unix_s: f64,
    elapsed_s: f64,
    exit_code: i32,
}

/// Common envelope of every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub command: String,
    pub status: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub result: T,
}

impl<T> Report<T> {
    fn new(command: &str, status: &str, cfg: &ExperimentConfig, result: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            status: status.to_string(),
            seed: cfg.mc.seed,
            config: cfg.clone(),
            result,
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// CSV with a `#` preamble carrying the schema, seed and resolved config.
fn write_csv<R: Serialize>(path: &Path, command: &str, cfg: &ExperimentConfig, rows: &[R]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "# irsplan {command} schema_version={SCHEMA_VERSION}")?;
    writeln!(f, "# seed={}", cfg.mc.seed)?;
    writeln!(f, "# config={}", serde_json::to_string(cfg)?)?;
    let mut w = csv::Writer::from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    /// `baseline` (no IRS) or `irs`.
    pub kind: &'static str,
    pub l_m: Option<f64>,
    pub range_m: f64,
    pub reachable: bool,
    /// `range_m` minus the baseline range.
    pub excess_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub baseline_m: f64,
    pub rows: Vec<CoverageRow>,
    /// Grid distances where `r*(l) - baseline` changes sign.
    pub crossings_m: Vec<f64>,
    /// Largest and smallest excess over the sweep.
    pub min_excess_m: f64,
    pub max_excess_m: f64,
}

pub fn coverage_sweep(cfg: &ExperimentConfig) -> Result<CoverageResult> {
    let c = &cfg.coverage;
    let base = coverage_range(&cfg.radio, &cfg.irs, c.power, c.threshold, None)?;
    let mut rows = vec![CoverageRow {
        kind: "baseline",
        l_m: None,
        range_m: base.range,
        reachable: base.reachable,
        excess_m: 0.0,
    }];
    let n = ((c.l_stop - c.l_start) / c.l_step + 1e-9).floor() as usize;
    for k in 0..=n {
        let l = c.l_start + k as f64 * c.l_step;
        let cov = coverage_range(&cfg.radio, &cfg.irs, c.power, c.threshold, Some(l))?;
        rows.push(CoverageRow {
            kind: "irs",
            l_m: Some(l),
            range_m: cov.range,
            reachable: cov.reachable,
            excess_m: cov.range - base.range,
        });
    }
    let irs_rows = &rows[1..];
    let crossings_m = irs_rows
        .windows(2)
        .filter(|w| (w[0].excess_m > 0.0) != (w[1].excess_m > 0.0))
        .map(|w| 0.5 * (w[0].l_m.unwrap_or(0.0) + w[1].l_m.unwrap_or(0.0)))
        .collect();
    let excess = irs_rows.iter().map(|r| r.excess_m);
    let min_excess_m = excess.clone().fold(f64::INFINITY, f64::min);
    let max_excess_m = excess.fold(f64::NEG_INFINITY, f64::max);
    Ok(CoverageResult {
        baseline_m: base.range,
        rows,
        crossings_m,
        min_excess_m,
        max_excess_m,
    })
}

pub fn cmd_coverage(cfg: &ExperimentConfig, out: &Path) -> Result<CoverageResult> {
    let res = coverage_sweep(cfg)?;
    write_csv(&out.join("coverage.csv"), "coverage", cfg, &res.rows)?;
    write_json(&out.join("coverage.json"), &Report::new("coverage", "ok", cfg, &res))?;
    Ok(res)
}

/// One region of a plan in the ring table. Ring 0 is the AP-only region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingRow {
    pub ring: usize,
    pub r_outer_m: f64,
    pub r_inner_m: f64,
    pub irs_count: Option<u32>,
    pub irs_radius_m: Option<f64>,
    pub rho: f64,
    pub coefficient: f64,
    pub mean_users_per_irs: Option<f64>,
    pub region_nu_bar: f64,
}

pub fn ring_table(cell: &CellConfig, res: &PlanResult) -> Vec<RingRow> {
    let plan = &res.plan;
    let alloc = &res.allocation;
    let coeff = |id: RegionId| {
        res.coefficients
            .iter()
            .find(|c| c.region == id)
            .map_or(0.0, |c| c.coefficient)
    };
    let mut rows = vec![RingRow {
        ring: 0,
        r_outer_m: plan.ap_disc_radius(),
        r_inner_m: 0.0,
        irs_count: None,
        irs_radius_m: None,
        rho: alloc.rho[0],
        coefficient: coeff(RegionId::ApOnly),
        mean_users_per_irs: None,
        region_nu_bar: alloc.region_throughputs[0],
    }];
    for ring in 1..=plan.rings() {
        rows.push(RingRow {
            ring,
            r_outer_m: plan.outer(ring),
            r_inner_m: plan.inner(ring),
            irs_count: Some(plan.irs_count(ring)),
            irs_radius_m: Some(plan.irs_radius(ring)),
            rho: alloc.rho[ring],
            coefficient: coeff(RegionId::Ring { ring }),
            mean_users_per_irs: Some(mean_users_per_sector(cell, plan, ring)),
            region_nu_bar: alloc.region_throughputs[ring],
        });
    }
    rows
}

fn run_planner(planner: &mut Planner, method: Method, m: u32, rings: usize) -> Result<PlanResult> {
    match method {
        Method::LineSearch => planner.line_search(m, rings),
        Method::Algorithm1 => planner.algorithm1(m, rings),
        other => Err(Error::Config(format!("{} is not a planner", other.name()))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub method: String,
    pub irs_total: u32,
    pub reasons: Vec<String>,
}

pub fn cmd_plan(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    let mut planner = Planner::new(cfg.model()?, cfg.grid)?;
    let p = &cfg.plan;
    match run_planner(&mut planner, p.method, p.irs_total, p.max_rings) {
        Ok(res) => {
            write_csv(&out.join("rings.csv"), "plan", cfg, &ring_table(&cfg.cell, &res))?;
            write_json(&out.join("plan.json"), &Report::new("plan", "ok", cfg, &res))?;
            Ok(Status::Ok)
        }
        Err(Error::Infeasible(reasons)) => {
            let inf = Infeasibility {
                method: p.method.name().to_string(),
                irs_total: p.irs_total,
                reasons,
            };
            write_json(&out.join("plan.json"), &Report::new("plan", "infeasible", cfg, &inf))?;
            eprintln!("infeasible: {}", inf.reasons.join("; "));
            Ok(Status::Infeasible)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub irs_total: u32,
    pub method: String,
    /// `ok` or `infeasible`.
    pub status: String,
    pub nu_bar: Option<f64>,
    pub eta0: Option<f64>,
    pub rate: Option<f64>,
    pub rings: Option<usize>,
    /// Benchmark whose power policy is this crate's own definition.
    pub repo_defined: bool,
}

impl SweepRow {
    fn ok(m: u32, method: Method, nu: f64, eta0: f64, rings: Option<usize>, repo_defined: bool) -> Self {
        Self {
            irs_total: m,
            method: method.name().to_string(),
            status: "ok".into(),
            nu_bar: Some(nu),
            eta0: Some(eta0),
            rate: Some((1.0 + eta0).log2()),
            rings,
            repo_defined,
        }
    }

    fn infeasible(m: u32, method: Method) -> Self {
        Self {
            irs_total: m,
            method: method.name().to_string(),
            status: "infeasible".into(),
            nu_bar: None,
            eta0: None,
            rate: None,
            rings: None,
            repo_defined: matches!(method, Method::IrsEqualPower | Method::IrsMeanCipc),
        }
    }
}

/// Rows ordered by IRS total, then by method in [`Method::ALL`] order. IRS
/// benchmarks reuse the line-search placement for the same total; with no
/// IRSs only the AP-only baselines are reported.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let s = &cfg.sweep;
    let (radio, cell, p_no) = (&cfg.radio, &cfg.cell, cfg.outage.target_nop);
    let mut planner = Planner::new(cfg.model()?, cfg.grid)?;
    let mut totals = s.irs_totals.clone();
    totals.sort_unstable();
    totals.dedup();
    let wanted = |m: Method| s.methods.contains(&m);
    let mut rows = Vec::new();
    for &m in &totals {
        let need_ls = wanted(Method::LineSearch) || wanted(Method::IrsEqualPower) || wanted(Method::IrsMeanCipc);
        let ls = if m > 0 && need_ls {
            match planner.line_search(m, s.line_search_rings) {
                Ok(r) => Some(r),
                Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        for method in Method::ALL.into_iter().filter(|&x| wanted(x)) {
            if m == 0 && method.uses_irs() {
                continue;
            }
            let row = match method {
                Method::ApEqualPower => {
                    let b = benchmark_equal_power(radio, cell, p_no)?;
                    SweepRow::ok(m, method, b.nu_bar, b.eta0, None, false)
                }
                Method::ApCipc => {
                    let b = benchmark_cipc(radio, cell, p_no)?;
                    SweepRow::ok(m, method, b.nu_bar, b.eta0, None, false)
                }
                Method::IrsEqualPower | Method::IrsMeanCipc => match &ls {
                    Some(r) => {
                        let f = if method == Method::IrsEqualPower {
                            benchmark_irs_equal_power
                        } else {
                            benchmark_irs_mean_cipc
                        };
                        let b = f(radio, cell, &cfg.irs, &r.plan, p_no)?;
                        SweepRow::ok(m, method, b.nu_bar, b.eta0, Some(r.plan.rings()), true)
                    }
                    None => SweepRow::infeasible(m, method),
                },
                Method::LineSearch => match &ls {
                    Some(r) => SweepRow::ok(m, method, r.nu_bar, r.allocation.eta0_star, Some(r.plan.rings()), false),
                    None => SweepRow::infeasible(m, method),
                },
                Method::Algorithm1 => match planner.algorithm1(m, s.algorithm1_rings) {
                    Ok(r) => SweepRow::ok(m, method, r.nu_bar, r.allocation.eta0_star, Some(r.plan.rings()), false),
                    Err(Error::Infeasible(_)) => SweepRow::infeasible(m, method),
                    Err(e) => return Err(e),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let rows = sweep(cfg)?;
    write_csv(&out.join("sweep.csv"), "sweep", cfg, &rows)?;
    write_json(&out.join("sweep.json"), &Report::new("sweep", "ok", cfg, &rows))?;
    Ok(rows)
}

/// Loads a plan from a `plan` report or a bare plan result and rescoring it
/// under `cfg`. A plan that does not fit the configured cell, or whose stored
/// throughput disagrees with the rescored one, is rejected.
pub fn load_plan(cfg: &ExperimentConfig, path: &Path) -> Result<PlanResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let (stored, source_cfg): (PlanResult, Option<ExperimentConfig>) = if value.get("schema_version").is_some() {
        let r: Report<PlanResult> = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("{}: not a feasible plan report: {e}", path.display())))?;
        (r.result, Some(r.config))
    } else {
        (serde_json::from_value(value)?, None)
    };
    let mismatch = |what: String| Error::Config(format!("plan/config mismatch: {what}"));
    if let Some(src) = &source_cfg {
        if src.cell != cfg.cell || src.radio != cfg.radio || src.irs != cfg.irs {
            return Err(mismatch(format!(
                "{} was planned for a different cell, radio or IRS setup",
                path.display()
            )));
        }
    }
    let violations = validate_plan(&cfg.cell, &stored.plan);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.into_iter().map(|v| v.message).collect();
        return Err(mismatch(msgs.join("; ")));
    }
    let plan = RingPlan {
        power_ratios: Vec::new(),
        ..stored.plan.clone()
    };
    let res = PlanResult::evaluate(&cfg.model()?, &stored.method, plan)?;
    if ((res.nu_bar - stored.nu_bar) / res.nu_bar).abs() > 1e-6 {
        return Err(mismatch(format!(
            "stored nu_bar {} but {} under this configuration",
            stored.nu_bar, res.nu_bar
        )));
    }
    Ok(res)
}

pub fn cmd_validate(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    let model = cfg.model()?;
    let res = match &cfg.validate.plan {
        Some(path) => load_plan(cfg, path)?,
        None => {
            let mut planner = Planner::new(model.clone(), cfg.grid)?;
            let p = &cfg.plan;
            match run_planner(&mut planner, p.method, p.irs_total, p.max_rings) {
                Ok(r) => r,
                Err(Error::Infeasible(reasons)) => {
                    let inf = Infeasibility {
                        method: p.method.name().to_string(),
                        irs_total: p.irs_total,
                        reasons,
                    };
                    write_json(&out.join("validation.json"), &Report::new("validate", "infeasible", cfg, &inf))?;
                    return Ok(Status::Infeasible);
                }
                Err(e) => return Err(e),
            }
        }
    };
    let report: ValidationReport = validate_plan_mc(&model, &res, &cfg.mc)?;
    write_json(&out.join("validation.json"), &Report::new("validate", "ok", cfg, &report))?;
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests;
