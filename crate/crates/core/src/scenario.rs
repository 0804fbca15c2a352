//! Scenario files: flat `section.key = value` lines with `#` comments.
//!
//! ```text
//! model.variant = full
//! model.beta = 0.2
//! response.family = holling1
//! response.k = 0.3
//! noise.kind = torus_rotation
//! noise.seed = 7
//! ```
//!
//! Every key is optional; omitted keys take the defaults of
//! [`Scenario::default`]. Unknown keys and duplicates are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::{Dynamics, Variant};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, Method};
use crate::model::{compute_thresholds, theta_u, ModelParams};
use crate::noise::{sample_realization, NoiseKind, NoiseRealization, NoiseSpec, DEFAULT_OU_STEP, DEFAULT_OU_T_MAX};
use crate::pullback::{AbsorbingRegion, PullbackConfig};
use crate::responses::{FunctionalResponse, ResponseSpec};
use crate::submodels::{si_region_v, sp_thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Text => "text",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            other => Err(Error::invalid("output.format", format!("expected json or text, got `{other}`"))),
        }
    }
}

/// Pullback settings as written in the file; the grid itself is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackSettings {
    /// `None` selects the per-variant default, see [`Scenario::delta`].
    pub delta: Option<f64>,
    pub ladder: Vec<f64>,
    pub grid_count: usize,
    pub grid_seed: u64,
    pub converge_tol: f64,
    pub singleton_tol: f64,
}

impl Default for PullbackSettings {
    fn default() -> Self {
        Self {
            delta: None,
            ladder: PullbackConfig::default_ladder(),
            grid_count: PullbackConfig::DEFAULT_GRID_COUNT,
            grid_seed: 0,
            converge_tol: PullbackConfig::DEFAULT_CONVERGE_TOL,
            singleton_tol: PullbackConfig::DEFAULT_SINGLETON_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub variant: Variant,
    pub params: ModelParams,
    /// Required by `full` and `sp`; optional for `si`, where it is unused.
    pub response: Option<ResponseSpec>,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    pub pullback: PullbackSettings,
    pub output_dir: PathBuf,
    pub format: ReportFormat,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            variant: Variant::Full,
            params: ModelParams::default(),
            response: Some(ResponseSpec::holling1(1.0)),
            noise: NoiseSpec::default_torus(1.0, 0.1),
            seed: 0,
            integrator: IntegratorConfig::default(),
            pullback: PullbackSettings::default(),
            output_dir: PathBuf::from("out"),
            format: ReportFormat::Json,
        }
    }
}

const MODEL_KEYS: [&str; 8] = [
    "model.mu",
    "model.beta",
    "model.eta",
    "model.c",
    "model.gamma",
    "model.r",
    "model.delta1",
    "model.delta2",
];

const OTHER_KEYS: [&str; 26] = [
    "model.variant",
    "response.family",
    "response.k",
    "response.m",
    "response.alpha",
    "response.a",
    "response.b",
    "response.c",
    "response.d",
    "noise.kind",
    "noise.q0",
    "noise.eps",
    "noise.seed",
    "noise.frequencies",
    "noise.rate",
    "noise.volatility",
    "noise.t_max",
    "noise.step",
    "integrator.method",
    "integrator.step",
    "integrator.abs_tol",
    "integrator.rel_tol",
    "integrator.max_steps",
    "integrator.positivity_floor",
    "output.dir",
    "output.format",
];

const PULLBACK_KEYS: [&str; 6] = [
    "pullback.delta",
    "pullback.ladder",
    "pullback.grid_count",
    "pullback.grid_seed",
    "pullback.converge_tol",
    "pullback.singleton_tol",
];

/// Whether `key` is a recognised scenario key.
pub fn is_known_key(key: &str) -> bool {
    MODEL_KEYS.contains(&key) || OTHER_KEYS.contains(&key) || PULLBACK_KEYS.contains(&key)
}

/// Keys that select a shape and therefore must be applied before the keys
/// that fill it in.
const STRUCTURAL_KEYS: [&str; 3] = ["model.variant", "response.family", "noise.kind"];

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::invalid(key, format!("expected a number, got `{value}`")))
}

fn unsigned<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::invalid(key, format!("expected a nonnegative integer, got `{value}`")))
}

fn number_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| number(key, v.trim())).collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl Scenario {
    /// Apply a single `key = value` assignment. Only the syntax of the value
    /// is checked here; ranges are checked by [`Scenario::validate`].
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if MODEL_KEYS.contains(&key) {
            let slot = self.params.field_mut(&key["model.".len()..]).expect("listed parameter");
            *slot = number(key, value)?;
            return Ok(());
        }
        match key {
            "model.variant" => self.variant = value.parse()?,
            "response.family" => {
                let fresh = ResponseSpec::default_for(value)?;
                if self.response.map(|r| r.family()) != Some(fresh.family()) {
                    self.response = Some(fresh);
                }
            }
            "response.k" | "response.m" | "response.alpha" | "response.a" | "response.b" | "response.c"
            | "response.d" => {
                let spec = self.response.get_or_insert(ResponseSpec::holling1(1.0));
                spec.set_coefficient(&key["response.".len()..], number(key, value)?)?;
            }
            "noise.kind" => {
                let kind = match value {
                    "constant" => NoiseKind::Constant,
                    "torus_rotation" => NoiseKind::TorusRotation {
                        frequencies: vec![2f64.sqrt(), 3f64.sqrt()],
                    },
                    "squashed_ou" => NoiseKind::SquashedOu {
                        rate: 1.0,
                        volatility: 1.0,
                        t_max: DEFAULT_OU_T_MAX,
                        step: DEFAULT_OU_STEP,
                    },
                    other => {
                        return Err(Error::invalid(
                            key,
                            format!("expected constant, torus_rotation or squashed_ou, got `{other}`"),
                        ))
                    }
                };
                if kind.name() != self.noise.kind.name() {
                    self.noise.kind = kind;
                }
            }
            "noise.q0" => self.noise.q0 = number(key, value)?,
            "noise.eps" => self.noise.eps = number(key, value)?,
            "noise.seed" => self.seed = unsigned(key, value)?,
            "noise.frequencies" => match &mut self.noise.kind {
                NoiseKind::TorusRotation { frequencies } => *frequencies = number_list(key, value)?,
                other => return Err(Error::invalid(key, format!("not used by noise kind {}", other.name()))),
            },
            "noise.rate" | "noise.volatility" | "noise.t_max" | "noise.step" => match &mut self.noise.kind {
                NoiseKind::SquashedOu {
                    rate,
                    volatility,
                    t_max,
                    step,
                } => {
                    let slot = match key {
                        "noise.rate" => rate,
                        "noise.volatility" => volatility,
                        "noise.t_max" => t_max,
                        _ => step,
                    };
                    *slot = number(key, value)?;
                }
                other => return Err(Error::invalid(key, format!("not used by noise kind {}", other.name()))),
            },
            "integrator.method" => self.integrator.method = value.parse::<Method>()?,
            "integrator.step" => self.integrator.step = number(key, value)?,
            "integrator.abs_tol" => self.integrator.abs_tol = number(key, value)?,
            "integrator.rel_tol" => self.integrator.rel_tol = number(key, value)?,
            "integrator.max_steps" => self.integrator.max_steps = unsigned(key, value)?,
            "integrator.positivity_floor" => self.integrator.positivity_floor = number(key, value)?,
            "pullback.delta" => self.pullback.delta = Some(number(key, value)?),
            "pullback.ladder" => self.pullback.ladder = number_list(key, value)?,
            "pullback.grid_count" => self.pullback.grid_count = unsigned(key, value)?,
            "pullback.grid_seed" => self.pullback.grid_seed = unsigned(key, value)?,
            "pullback.converge_tol" => self.pullback.converge_tol = number(key, value)?,
            "pullback.singleton_tol" => self.pullback.singleton_tol = number(key, value)?,
            "output.dir" => {
                if value.is_empty() {
                    return Err(Error::invalid(key, "must not be empty"));
                }
                self.output_dir = PathBuf::from(value);
            }
            "output.format" => self.format = value.parse()?,
            other => return Err(Error::invalid(other, "unknown key")),
        }
        Ok(())
    }

    /// Parse scenario text. `path` is only used in error messages.
    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(parse_err(line_no, format!("expected `key = value`, got `{content}`")));
            };
            let key = key.trim();
            if !is_known_key(key) {
                return Err(parse_err(line_no, format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(parse_err(line_no, format!("duplicate key `{key}` (first set on line {first})")));
            }
            entries.insert(key.to_string(), (line_no, value.trim().to_string()));
        }

        let mut scenario = Scenario::default();
        if !entries.contains_key("response.family")
            && !entries.keys().any(|k| k.starts_with("response."))
            && entries.get("model.variant").is_some_and(|(_, v)| v == "si")
        {
            scenario.response = None;
        }
        let ordered = STRUCTURAL_KEYS
            .iter()
            .filter_map(|k| entries.get_key_value(*k))
            .chain(entries.iter().filter(|(k, _)| !STRUCTURAL_KEYS.contains(&k.as_str())));
        for (key, (line_no, value)) in ordered {
            scenario
                .set_key(key, value)
                .map_err(|e| parse_err(*line_no, e.to_string()))?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    /// Render as scenario text that parses back to an equal value.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            writeln!(out, "{key} = {value}").expect("writing to a String");
        };
        put("model.variant", self.variant.name().to_string());
        for (name, value) in self.params.named() {
            put(&format!("model.{name}"), value.to_string());
        }
        if let Some(response) = &self.response {
            put("response.family", response.family().to_string());
            for (name, value) in response.coefficients() {
                put(&format!("response.{name}"), value.to_string());
            }
        }
        put("noise.kind", self.noise.kind.name().to_string());
        put("noise.q0", self.noise.q0.to_string());
        put("noise.eps", self.noise.eps.to_string());
        put("noise.seed", self.seed.to_string());
        match &self.noise.kind {
            NoiseKind::Constant => {}
            NoiseKind::TorusRotation { frequencies } => put("noise.frequencies", join(frequencies)),
            NoiseKind::SquashedOu {
                rate,
                volatility,
                t_max,
                step,
            } => {
                put("noise.rate", rate.to_string());
                put("noise.volatility", volatility.to_string());
                put("noise.t_max", t_max.to_string());
                put("noise.step", step.to_string());
            }
        }
        let ic = &self.integrator;
        put("integrator.method", ic.method.name().to_string());
        put("integrator.step", ic.step.to_string());
        put("integrator.abs_tol", ic.abs_tol.to_string());
        put("integrator.rel_tol", ic.rel_tol.to_string());
        put("integrator.max_steps", ic.max_steps.to_string());
        put("integrator.positivity_floor", ic.positivity_floor.to_string());
        let pb = &self.pullback;
        if let Some(delta) = pb.delta {
            put("pullback.delta", delta.to_string());
        }
        put("pullback.ladder", join(&pb.ladder));
        put("pullback.grid_count", pb.grid_count.to_string());
        put("pullback.grid_seed", pb.grid_seed.to_string());
        put("pullback.converge_tol", pb.converge_tol.to_string());
        put("pullback.singleton_tol", pb.singleton_tol.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("output.format", self.format.name().to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(response) = &self.response {
            response.validate()?;
        } else if self.variant.needs_response() {
            return Err(Error::invalid(
                "response.family",
                format!("variant {} requires a functional response", self.variant),
            ));
        }
        self.noise.validate()?;
        self.integrator.validate()?;
        if self.pullback.grid_count == 0 {
            return Err(Error::invalid("pullback.grid_count", "must be at least 1"));
        }
        let cfg = PullbackConfig {
            time_ladder: self.pullback.ladder.clone(),
            grid: vec![Default::default()],
            converge_tol: self.pullback.converge_tol,
            singleton_tol: self.pullback.singleton_tol,
        };
        cfg.validate()?;
        if let NoiseKind::SquashedOu { t_max, .. } = self.noise.kind {
            let longest = self.pullback.ladder.last().copied().unwrap_or(0.0);
            if longest >= t_max {
                return Err(Error::invalid(
                    "pullback.ladder",
                    format!("longest pullback time {longest} must be below noise.t_max={t_max}"),
                ));
            }
        }
        self.region()?;
        Ok(())
    }

    pub fn response_dyn(&self) -> Option<&dyn FunctionalResponse> {
        self.response.as_ref().map(|r| r as &dyn FunctionalResponse)
    }

    pub fn dynamics(&self) -> Result<Dynamics<'_>> {
        Dynamics::new(self.variant, &self.params, self.response_dyn())
    }

    pub fn realization(&self) -> Result<NoiseRealization> {
        sample_realization(&self.noise, self.seed)
    }

    /// The region width `δ`: the configured value, or 5% of the upper level
    /// of the variant's region (capped at `Λˡ/c` for `si`).
    pub fn delta(&self) -> f64 {
        if let Some(delta) = self.pullback.delta {
            return delta;
        }
        let (lo, hi) = (self.noise.lambda_lo(), self.noise.lambda_hi());
        let p = &self.params;
        match self.variant {
            Variant::Full => 0.05 * theta_u(p, hi),
            Variant::Si => (0.05 * hi / p.mu).min(lo / p.c),
            Variant::Sp => 0.05 * p.gamma * hi / p.mu.min(p.delta1),
        }
    }

    pub fn region(&self) -> Result<AbsorbingRegion> {
        let (q0, eps, delta) = (self.noise.q0, self.noise.eps, self.delta());
        Ok(match self.variant {
            Variant::Full => {
                let response = self.response_dyn().ok_or_else(|| Error::invalid("response.family", "missing"))?;
                AbsorbingRegion::K {
                    thresholds: compute_thresholds(&self.params, response, q0, eps, delta)?,
                    r: self.params.r,
                }
            }
            Variant::Si => AbsorbingRegion::V {
                interval: si_region_v(&self.params, q0, eps, delta)?,
            },
            Variant::Sp => AbsorbingRegion::W {
                thresholds: sp_thresholds(&self.params, q0, eps, delta)?,
                gamma: self.params.gamma,
            },
        })
    }

    pub fn pullback_config(&self) -> Result<PullbackConfig> {
        let grid = self.region()?.grid(self.pullback.grid_count, self.pullback.grid_seed);
        let cfg = PullbackConfig {
            time_ladder: self.pullback.ladder.clone(),
            grid,
            converge_tol: self.pullback.converge_tol,
            singleton_tol: self.pullback.singleton_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_string())
    }
}

/// Read and validate a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::parse_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario> {
        Scenario::parse_str(text, Path::new("test.cfg"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let s = parse("# nothing here\n\n").unwrap();
        assert_eq!(s, Scenario::default());
        assert_eq!(s.integrator.method, Method::Rk45Adaptive);
        assert_eq!(s.noise.kind.name(), "torus_rotation");
        assert!((s.delta() - 0.05 * 1.32).abs() < 1e-15);
    }

    #[test]
    fn reads_keys_in_any_order() {
        let s = parse(
            "response.k = 0.3   # predation\nresponse.family = holling1\nmodel.beta=0.5\nnoise.seed = 9\nnoise.kind = constant\n",
        )
        .unwrap();
        assert_eq!(s.response, Some(ResponseSpec::holling1(0.3)));
        assert_eq!(s.params.beta, 0.5);
        assert_eq!(s.seed, 9);
        assert_eq!(s.noise.kind, NoiseKind::Constant);
    }

    #[test]
    fn rejects_bad_input() {
        let err = parse("model.mu = 0.5\nmodel.zeta = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("model.mu = 0.5\nmodel.mu = 0.4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse("model.mu 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("model.mu = abc\n").unwrap_err();
        assert!(err.to_string().contains("model.mu"));
        let err = parse("noise.rate = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("response.family = holling1\nresponse.m = 2\n").unwrap_err();
        assert!(err.to_string().contains("response.m"));
    }

    #[test]
    fn validation_names_the_field() {
        let err = parse("model.mu = 1.5\nmodel.c = 1.0\n").unwrap_err();
        assert!(matches!(&err, Error::InvalidSpec { field, .. } if field == "model.mu"), "{err}");
        assert!(err.to_string().contains("mu < c"));
        let err = parse("noise.eps = 1.2\n").unwrap_err();
        assert!(matches!(&err, Error::InvalidSpec { field, .. } if field == "noise.eps"));
        assert_eq!(err.exit_code(), 2);
        let err = parse("model.variant = sp\nnoise.kind = squashed_ou\nnoise.t_max = 100\n").unwrap_err();
        assert!(matches!(&err, Error::InvalidSpec { field, .. } if field == "pullback.ladder"));
    }

    #[test]
    fn si_needs_no_response() {
        let s = parse("model.variant = si\n").unwrap();
        assert_eq!(s.response, None);
        assert!((s.delta() - 0.11).abs() < 1e-12);
        assert!(s.dynamics().is_ok());
        let mut sp = parse("model.variant = sp\n").unwrap();
        sp.response = None;
        assert!(sp.validate().is_err());
    }

    #[test]
    fn round_trip() {
        let mut s = Scenario::default();
        s.variant = Variant::Sp;
        s.response = Some(ResponseSpec::CrowleyMartin {
            k: 0.1,
            a: 1.0 / 3.0,
            b: 2.0,
            c: 0.7,
            d: 1e-3,
        });
        s.noise = NoiseSpec::squashed_ou(1.1, 0.2, 0.5, 0.3, 1000.0, 0.01);
        s.seed = u64::MAX;
        s.pullback.delta = Some(0.123);
        s.pullback.ladder = vec![1.5, 3.0, 100.0];
        s.output_dir = PathBuf::from("results/run one");
        s.format = ReportFormat::Text;
        let text = s.to_config_string();
        assert_eq!(parse(&text).unwrap(), s);
        assert_eq!(parse(&Scenario::default().to_config_string()).unwrap(), Scenario::default());
    }

    #[test]
    fn grid_comes_from_region() {
        let s = Scenario::default();
        let cfg = s.pullback_config().unwrap();
        let region = s.region().unwrap();
        assert_eq!(cfg.grid.len(), 64);
        assert!(cfg.grid.iter().all(|x| region.contains(*x, 1e-12)));
    }
}
