//! Command-line front end: `thresholds`, `simulate`, `pullback`, `check` and
//! `sweep`. Each command has a library entry point returning structured data
//! so it can be driven without a process boundary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::dynamics::{Dynamics, Variant};
use crate::error::{Error, Result};
use crate::integrator::{csv_number, flow_phi, integrate};
use crate::model::{
    compute_thresholds, extinction_criterion, mn_values, persistence_bound, CriterionReport, State,
};
use crate::pullback::{estimate_attractor_section, s_star_default, AbsorbingRegion, AttractorEstimate};
use crate::responses::{check_hypotheses, FunctionalResponse, Witness};
use crate::scenario::{is_known_key, parse_scenario, ReportFormat, Scenario};
use crate::submodels::{
    si_extinction_criterion, si_persistence_bound, si_region_v, sp_extinction_criterion, sp_persistence_bound,
    sp_thresholds,
};

/// Boundary tolerance for region membership in reports and spot checks.
pub const REGION_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "ecoepi", version, about = "Random eco-epidemic predator-prey model toolkit")]
pub struct Cli {
    /// Scenario file; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Noise seed (overrides noise.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report format (overrides output.format).
    #[arg(long, global = true, value_parser = ["json", "text"])]
    pub format: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print region thresholds, persistence bounds and extinction margins.
    Thresholds,
    /// Integrate one trajectory and write trajectory.csv and summary.json.
    Simulate {
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 100.0)]
        t1: f64,
        /// Initial state, comma separated (S,I,P or the variant's columns).
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
    },
    /// Estimate the attractor section and write estimate.json and endpoints.csv.
    Pullback,
    /// Run the hypothesis and consistency checks; exit status 1 on failure.
    Check,
    /// Vary one scenario key and write sweep.csv.
    Sweep {
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<String>,
    },
}

/// Parse arguments and run; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(cli: &Cli) -> Result<Scenario> {
    let mut scenario = match &cli.config {
        Some(path) => parse_scenario(path)?,
        None => Scenario::default(),
    };
    if let Some(out) = &cli.out {
        scenario.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(format) = &cli.format {
        scenario.format = format.parse()?;
    }
    Ok(scenario)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let scenario = load(cli)?;
    match &cli.command {
        Command::Thresholds => {
            let report = thresholds_report(&scenario)?;
            stdout.write_all(render(&report, scenario.format, ThresholdsReport::to_text)?.as_bytes())?;
            Ok(0)
        }
        Command::Simulate { t0, t1, x0 } => {
            let x0 = parse_state(scenario.variant, x0)?;
            let summary = cmd_simulate(&scenario, *t0, *t1, x0)?;
            writeln!(stdout, "wrote {}", scenario.output_dir.join("trajectory.csv").display())?;
            writeln!(stdout, "wrote {}", scenario.output_dir.join("summary.json").display())?;
            if !summary.region_membership {
                writeln!(stdout, "note: trajectory left the absorbing region")?;
            }
            Ok(0)
        }
        Command::Pullback => {
            let summary = cmd_pullback(&scenario)?;
            writeln!(stdout, "wrote {}", scenario.output_dir.join("estimate.json").display())?;
            writeln!(stdout, "wrote {}", scenario.output_dir.join("endpoints.csv").display())?;
            writeln!(
                stdout,
                "converged = {}, diameter = {:?}, s_star = {:?}",
                summary.converged, summary.diameter, summary.s_star
            )?;
            Ok(0)
        }
        Command::Check => {
            let report = cmd_check(&scenario)?;
            stdout.write_all(render(&report, scenario.format, CheckReport::to_text)?.as_bytes())?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Sweep { key, values } => {
            cmd_sweep(&scenario, key, values)?;
            writeln!(stdout, "wrote {}", scenario.output_dir.join("sweep.csv").display())?;
            Ok(0)
        }
    }
}

fn render<T: Serialize>(value: &T, format: ReportFormat, text: impl Fn(&T) -> String) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(value)? + "\n",
        ReportFormat::Text => text(value),
    })
}

/// Parse `S,I,P`, or just the active columns of `variant`.
pub fn parse_state(variant: Variant, text: &str) -> Result<State> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("x0", format!("expected a number, got `{}`", v.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    let x = if values.len() == 3 {
        State::new(values[0], values[1], values[2])
    } else {
        variant.embed(&values)?
    };
    x.validate_nonnegative("x0")?;
    if !variant.admits(x) {
        return Err(Error::invalid(
            "x0",
            format!("inactive compartment must be zero for variant {variant}"),
        ));
    }
    Ok(x)
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(csv_number).unwrap_or_default()
}

// ---------------------------------------------------------------- thresholds

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionSummary {
    pub margin1: Option<f64>,
    pub cond1: Option<bool>,
    pub margin2: Option<f64>,
    pub cond2: Option<bool>,
    pub certified: bool,
}

impl From<CriterionReport> for ExtinctionSummary {
    fn from(r: CriterionReport) -> Self {
        Self {
            margin1: r.infected.map(|c| c.margin),
            cond1: r.infected.map(|c| c.holds),
            margin2: r.predator.map(|c| c.margin),
            cond2: r.predator.map(|c| c.holds),
            certified: r.certified(),
        }
    }
}

/// Named threshold values for the scenario's variant plus its extinction
/// margins. `upper`/`lower` name the two levels of the absorbing region.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdsReport {
    pub variant: Variant,
    pub values: Vec<(&'static str, f64)>,
    pub upper: &'static str,
    pub lower: &'static str,
    pub extinction: ExtinctionSummary,
}

impl ThresholdsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn upper_level(&self) -> f64 {
        self.get(self.upper).expect("upper level present")
    }

    pub fn lower_level(&self) -> f64 {
        self.get(self.lower).expect("lower level present")
    }

    pub fn persistence_bound(&self) -> f64 {
        self.get("persistence_bound").expect("bound present")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("variant = {}\n", self.variant);
        for (name, value) in &self.values {
            out += &format!("{name} = {value}\n");
        }
        let e = &self.extinction;
        for (name, value) in [
            ("margin1", fmt_opt(e.margin1)),
            ("cond1", fmt_opt(e.cond1)),
            ("margin2", fmt_opt(e.margin2)),
            ("cond2", fmt_opt(e.cond2)),
        ] {
            if !value.is_empty() {
                out += &format!("{name} = {value}\n");
            }
        }
        out += &format!("certified = {}\n", e.certified);
        out
    }
}

impl Serialize for ThresholdsReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.values.len() + 2))?;
        map.serialize_entry("variant", &self.variant)?;
        for (name, value) in &self.values {
            map.serialize_entry(name, value)?;
        }
        map.serialize_entry("extinction", &self.extinction)?;
        map.end()
    }
}

pub fn thresholds_report(scenario: &Scenario) -> Result<ThresholdsReport> {
    scenario.validate()?;
    let (q0, eps, delta) = (scenario.noise.q0, scenario.noise.eps, scenario.delta());
    let p = &scenario.params;
    let mut values = vec![
        ("q0", q0),
        ("eps", eps),
        ("lambda_lo", scenario.noise.lambda_lo()),
        ("lambda_hi", scenario.noise.lambda_hi()),
        ("delta", delta),
    ];
    let (upper, lower, criterion) = match scenario.variant {
        Variant::Full => {
            let response = scenario.response_dyn().expect("validated");
            let th0 = compute_thresholds(p, response, q0, eps, 0.0)?;
            let th = compute_thresholds(p, response, q0, eps, delta)?;
            values.extend([
                ("a_u", th.a_u),
                ("a_l", th.a_l),
                ("theta_u", th.theta_u),
                ("theta_l_0", th0.theta_l_delta),
                ("theta_l_delta", th.theta_l_delta),
                ("xi_0", th0.xi_delta),
                ("zeta_0", th0.zeta_delta),
                ("xi_delta", th.xi_delta),
                ("zeta_delta", th.zeta_delta),
                ("persistence_bound", persistence_bound(&th0)),
                ("persistence_bound_delta", persistence_bound(&th)),
            ]);
            ("theta_u", "theta_l_delta", extinction_criterion(p, response, &th))
        }
        Variant::Si => {
            let v = si_region_v(p, q0, eps, delta)?;
            values.extend([
                ("v_lo", v.lo),
                ("v_hi", v.hi),
                ("persistence_bound", si_persistence_bound(p, q0, eps)?),
            ]);
            ("v_hi", "v_lo", si_extinction_criterion(p, q0, eps)?)
        }
        Variant::Sp => {
            let response = scenario.response_dyn().expect("validated");
            let th0 = sp_thresholds(p, q0, eps, 0.0)?;
            let th = sp_thresholds(p, q0, eps, delta)?;
            values.extend([
                ("theta_hat_u", th.theta_hat_u),
                ("theta_hat_l_0", th0.theta_hat_l_delta),
                ("theta_hat_l_delta", th.theta_hat_l_delta),
                ("persistence_bound", sp_persistence_bound(p, response, q0, eps)?),
            ]);
            ("theta_hat_u", "theta_hat_l_delta", sp_extinction_criterion(p, response, q0, eps)?)
        }
    };
    Ok(ThresholdsReport {
        variant: scenario.variant,
        values,
        upper,
        lower,
        extinction: criterion.into(),
    })
}

// ------------------------------------------------------------------ simulate

/// The region's defining linear level(s) at `x`: `(M, N)` for the full
/// system, `S + I` for SI and `γS + P` for SP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Levels {
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

impl Levels {
    pub fn of(region: &AbsorbingRegion, x: State) -> Self {
        let mut out = Levels {
            m: None,
            n: None,
            v: None,
            w: None,
        };
        match region {
            AbsorbingRegion::K { thresholds, r } => {
                let (m, n) = mn_values(thresholds.a_u, thresholds.a_l, *r, x);
                out.m = Some(m);
                out.n = Some(n);
            }
            AbsorbingRegion::V { .. } => out.v = Some(x.s + x.i),
            AbsorbingRegion::W { gamma, .. } => out.w = Some(gamma * x.s + x.p),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub variant: Variant,
    pub omega_seed: u64,
    pub t0: f64,
    pub t1: f64,
    pub x0: Vec<f64>,
    pub samples: usize,
    pub terminal: Vec<f64>,
    /// Smallest active component over all samples.
    pub min_component: f64,
    pub terminal_levels: Levels,
    pub delta: f64,
    /// Every sample lies in the absorbing region (boundary tolerance 1e-6).
    pub region_membership: bool,
    pub region_membership_terminal: bool,
}

pub fn cmd_simulate(scenario: &Scenario, t0: f64, t1: f64, x0: State) -> Result<SimulationSummary> {
    scenario.validate()?;
    let dynamics = scenario.dynamics()?;
    let omega = scenario.realization()?;
    let region = scenario.region()?;
    let variant = scenario.variant;
    let traj = integrate(&dynamics, &omega, t0, t1, x0, &scenario.integrator)?;
    let (_, terminal) = traj.last().expect("trajectory has samples");
    let min_component = traj
        .states
        .iter()
        .flat_map(|x| variant.project(*x))
        .fold(f64::INFINITY, f64::min);
    let summary = SimulationSummary {
        variant,
        omega_seed: scenario.seed,
        t0,
        t1,
        x0: variant.project(x0),
        samples: traj.len(),
        terminal: variant.project(terminal),
        min_component,
        terminal_levels: Levels::of(&region, terminal),
        delta: scenario.delta(),
        region_membership: traj.states.iter().all(|x| region.contains(*x, REGION_TOL)),
        region_membership_terminal: region.contains(terminal, REGION_TOL),
    };
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    write_atomic(&scenario.output_dir.join("trajectory.csv"), &csv)?;
    write_atomic(&scenario.output_dir.join("summary.json"), json.as_bytes())?;
    Ok(summary)
}

// ------------------------------------------------------------------ pullback

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackSummary {
    pub variant: Variant,
    pub omega_seed: u64,
    pub noise_kind: &'static str,
    pub ladder: Vec<f64>,
    pub per_rung_dist: Vec<f64>,
    pub converged: bool,
    pub diameter: f64,
    pub singleton: bool,
    pub endpoints: Vec<Vec<f64>>,
    pub s_star: f64,
}

impl PullbackSummary {
    fn new(variant: Variant, est: AttractorEstimate, singleton_tol: f64, s_star: f64) -> Self {
        Self {
            variant,
            omega_seed: est.omega_seed,
            noise_kind: est.noise_kind,
            singleton: est.is_singleton(singleton_tol),
            ladder: est.ladder,
            per_rung_dist: est.per_rung_dist,
            converged: est.converged,
            diameter: est.diameter,
            endpoints: est.endpoints.iter().map(|x| variant.project(*x)).collect(),
            s_star,
        }
    }

    /// CSV `x0_index,S,I,P` (or the variant's columns).
    pub fn endpoints_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["x0_index"];
        header.extend_from_slice(self.variant.columns());
        w.write_record(&header)?;
        for (idx, x) in self.endpoints.iter().enumerate() {
            let mut row = vec![idx.to_string()];
            row.extend(x.iter().copied().map(csv_number));
            w.write_record(&row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Estimate without writing files.
pub fn pullback_summary(scenario: &Scenario) -> Result<PullbackSummary> {
    scenario.validate()?;
    let dynamics = scenario.dynamics()?;
    let omega = scenario.realization()?;
    let cfg = scenario.pullback_config()?;
    let est = estimate_attractor_section(&dynamics, &omega, &cfg, &scenario.integrator)?;
    let s_star = s_star_default(&omega, scenario.params.mu)?;
    Ok(PullbackSummary::new(scenario.variant, est, cfg.singleton_tol, s_star))
}

pub fn cmd_pullback(scenario: &Scenario) -> Result<PullbackSummary> {
    let summary = pullback_summary(scenario)?;
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    let csv = summary.endpoints_csv()?;
    write_atomic(&scenario.output_dir.join("estimate.json"), json.as_bytes())?;
    write_atomic(&scenario.output_dir.join("endpoints.csv"), &csv)?;
    Ok(summary)
}

// --------------------------------------------------------------------- check

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub checks: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out += &format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            if let Some(w) = &c.witness {
                out += &format!(" (witness x={:?} f(x)={}", w.x, w.value_x);
                if let (Some(y), Some(vy)) = (w.y, w.value_y) {
                    out += &format!(", y={y:?} f(y)={vy}");
                }
                out += ")";
            }
            out += "\n";
        }
        out += &format!("overall: {}\n", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

/// Lattice used for the response checks.
pub const CHECK_BOX: f64 = 100.0;
pub const CHECK_GRID: usize = 16;

pub fn cmd_check(scenario: &Scenario) -> Result<CheckReport> {
    check_with_response(scenario, None)
}

/// [`cmd_check`] with the scenario's response replaced by `response`.
pub fn check_with_response(scenario: &Scenario, response: Option<&dyn FunctionalResponse>) -> Result<CheckReport> {
    scenario.validate()?;
    let response = response.or(scenario.response_dyn());
    let dynamics = Dynamics::new(scenario.variant, &scenario.params, response)?;
    let omega = scenario.realization()?;
    let region = scenario.region()?;
    let mut checks = vec![CheckEntry {
        name: "parameters".into(),
        passed: true,
        detail: "rates positive, mu < c, recruitment bounds positive".into(),
        witness: None,
    }];

    if let (true, Some(resp)) = (scenario.variant.needs_response(), response) {
        let report = check_hypotheses(resp, CHECK_BOX, CHECK_GRID)?;
        for c in report.checks {
            checks.push(CheckEntry {
                name: format!("response.{}", c.name),
                passed: c.passed,
                detail: format!("lattice {CHECK_GRID}^3 on [0, {CHECK_BOX}]^3"),
                witness: c.witness,
            });
        }
    }

    let (lo, hi) = (scenario.noise.lambda_lo(), scenario.noise.lambda_hi());
    let (w_lo, w_hi) = omega.window();
    let (t_start, t_end) = (w_lo.max(-200.0), w_hi.min(200.0));
    let slack = 1e-12 * hi;
    let mut worst: Option<(f64, f64)> = None;
    let mut t = t_start;
    while t <= t_end {
        let v = omega.lambda_at(t)?;
        if !(v >= lo - slack && v <= hi + slack) {
            worst = Some((t, v));
            break;
        }
        t += 0.01;
    }
    checks.push(CheckEntry {
        name: "noise.bounds".into(),
        passed: worst.is_none(),
        detail: match worst {
            None => format!("lambda in [{lo}, {hi}] on [{t_start}, {t_end}]"),
            Some((t, v)) => format!("lambda({t}) = {v} outside [{lo}, {hi}]"),
        },
        witness: None,
    });

    let starts = region.grid(16, scenario.pullback.grid_seed);
    let cfg = &scenario.integrator;
    let mut cocycle_err = 0.0f64;
    for x in starts.iter().take(4) {
        for (s, t) in [(0.5, 0.5), (0.5, 2.0), (2.0, 0.5), (2.0, 2.0)] {
            let direct = flow_phi(&dynamics, &omega, s + t, *x, cfg)?;
            let mid = flow_phi(&dynamics, &omega, s, *x, cfg)?;
            let composed = flow_phi(&dynamics, &omega.shift(s)?, t, mid, cfg)?;
            cocycle_err = cocycle_err.max(direct.distance(&composed));
        }
    }
    checks.push(CheckEntry {
        name: "cocycle".into(),
        passed: cocycle_err <= REGION_TOL,
        detail: format!("max deviation {cocycle_err:e} (tolerance {REGION_TOL:e})"),
        witness: None,
    });

    let mut escaped = None;
    for x in &starts {
        let traj = integrate(&dynamics, &omega, 0.0, 50.0, *x, cfg)?;
        let exit = traj.iter().find(|(_, y)| !region.contains(*y, REGION_TOL));
        if let Some((t, _)) = exit {
            escaped = Some((*x, t));
            break;
        }
    }
    checks.push(CheckEntry {
        name: "region_invariance".into(),
        passed: escaped.is_none(),
        detail: match escaped {
            None => format!("{} starts stay in the region on [0, 50]", starts.len()),
            Some((x, t)) => format!("start {:?} leaves the region at t={t}", x.to_array()),
        },
        witness: None,
    });

    Ok(CheckReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

// --------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepRow {
    pub value: String,
    pub theta_u: Option<f64>,
    pub theta_l: Option<f64>,
    pub persistence_bound: Option<f64>,
    pub margin1: Option<f64>,
    pub cond1: Option<bool>,
    pub margin2: Option<f64>,
    pub cond2: Option<bool>,
    pub diameter: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "value",
    "theta_u",
    "theta_l",
    "persistence_bound",
    "margin1",
    "cond1",
    "margin2",
    "cond2",
    "diameter",
    "converged",
    "error",
];

impl SweepRow {
    fn record(&self) -> [String; 11] {
        [
            self.value.clone(),
            fmt_num(self.theta_u),
            fmt_num(self.theta_l),
            fmt_num(self.persistence_bound),
            fmt_num(self.margin1),
            fmt_opt(self.cond1),
            fmt_num(self.margin2),
            fmt_opt(self.cond2),
            fmt_num(self.diameter),
            fmt_opt(self.converged),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn sweep_row(base: &Scenario, key: &str, value: &str) -> SweepRow {
    let mut row = SweepRow {
        value: value.to_string(),
        ..Default::default()
    };
    let mut scenario = base.clone();
    let outcome = scenario.set_key(key, value).and_then(|_| {
        let report = thresholds_report(&scenario)?;
        row.theta_u = Some(report.upper_level());
        row.theta_l = Some(report.lower_level());
        row.persistence_bound = Some(report.persistence_bound());
        row.margin1 = report.extinction.margin1;
        row.cond1 = report.extinction.cond1;
        row.margin2 = report.extinction.margin2;
        row.cond2 = report.extinction.cond2;
        let summary = pullback_summary(&scenario)?;
        row.diameter = Some(summary.diameter);
        row.converged = Some(summary.converged);
        Ok(())
    });
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// Rows in the order of `values`; failures land in the `error` column.
pub fn sweep_rows(scenario: &Scenario, key: &str, values: &[String]) -> Result<Vec<SweepRow>> {
    if !is_known_key(key) || key.starts_with("output.") {
        return Err(Error::invalid("--key", format!("`{key}` is not a sweepable scenario key")));
    }
    if values.is_empty() {
        return Err(Error::invalid("--values", "at least one value is required"));
    }
    scenario.validate()?;
    Ok(values.par_iter().map(|v| sweep_row(scenario, key, v)).collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn cmd_sweep(scenario: &Scenario, key: &str, values: &[String]) -> Result<Vec<SweepRow>> {
    let rows = sweep_rows(scenario, key, values)?;
    write_atomic(&scenario.output_dir.join("sweep.csv"), &sweep_csv(&rows)?)?;
    Ok(rows)
}
