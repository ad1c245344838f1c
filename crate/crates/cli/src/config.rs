//! Experiment configuration: a JSON document parsed into [`RawConfig`] and
//! validated into [`ExperimentConfig`], with every violation reported at once.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use nsfde::lab::{stroock_bound, StroockSetup};
use nsfde::model::{make_mesh, AffineSpec, CoefficientSet, Preset, Segment, TimeMesh, PRESET_NAMES};
use nsfde::rate::RateOptions;
use nsfde::sim::{NoiseSeed, DEFAULT_NEUTRAL_TOL};
use nsfde::skeleton::ControlPath;

pub const EXPERIMENT_NAMES: [&str; 7] = [
    "simulate",
    "skeleton",
    "rate",
    "check-assumptions",
    "ldp-verify",
    "stroock",
    "compare",
];

pub const TOLERANCE_KEYS: [&str; 4] = ["neutral_tol", "residual_tol", "relative_tol", "fd_step"];

pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_TRIALS: usize = 1_000;
pub const DEFAULT_STROOCK_STEPS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Skeleton,
    Rate,
    CheckAssumptions,
    LdpVerify,
    Stroock,
    Compare,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Skeleton => "skeleton",
            Experiment::Rate => "rate",
            Experiment::CheckAssumptions => "check-assumptions",
            Experiment::LdpVerify => "ldp-verify",
            Experiment::Stroock => "stroock",
            Experiment::Compare => "compare",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => Experiment::Simulate,
            "skeleton" => Experiment::Skeleton,
            "rate" => Experiment::Rate,
            "check-assumptions" => Experiment::CheckAssumptions,
            "ldp-verify" => Experiment::LdpVerify,
            "stroock" => Experiment::Stroock,
            "compare" => Experiment::Compare,
            other => {
                return Err(format!(
                    "unknown experiment `{other}`; expected one of {}",
                    EXPERIMENT_NAMES.join(", ")
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    ExponentialCloseness,
    Tightness,
    TruncationCloseness,
}

impl Lemma {
    pub fn name(&self) -> &'static str {
        match self {
            Lemma::ExponentialCloseness => "exponential-closeness",
            Lemma::Tightness => "tightness",
            Lemma::TruncationCloseness => "truncation-closeness",
        }
    }
}

impl FromStr for Lemma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "exponential-closeness" => Lemma::ExponentialCloseness,
            "tightness" => Lemma::Tightness,
            "truncation-closeness" => Lemma::TruncationCloseness,
            other => {
                return Err(format!(
                    "unknown lemma `{other}`; expected exponential-closeness, tightness or truncation-closeness"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateSource {
    Optimizer,
    Oracle,
}

impl RateSource {
    pub fn name(&self) -> &'static str {
        match self {
            RateSource::Optimizer => "optimizer",
            RateSource::Oracle => "oracle",
        }
    }
}

/// A named preset or inline affine coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    Preset(Preset),
    Affine(AffineSpec),
}

impl CoefficientSpec {
    pub fn build(&self, dim: usize) -> nsfde::Result<CoefficientSet> {
        match self {
            CoefficientSpec::Preset(p) => p.build(dim),
            CoefficientSpec::Affine(spec) => spec.to_coefficients(),
        }
    }

    pub fn affine(&self, dim: usize) -> Option<AffineSpec> {
        match self {
            CoefficientSpec::Preset(p) => p.affine(dim),
            CoefficientSpec::Affine(spec) => Some(spec.clone()),
        }
    }

    /// Bound on the coefficients over the `r`-ball, the default `m_R`.
    pub fn sup_on_ball(&self, dim: usize, r: f64) -> nsfde::Result<f64> {
        match self {
            CoefficientSpec::Preset(p) => p.sup_on_ball(dim, r),
            CoefficientSpec::Affine(spec) => spec.sup_on_ball(r),
        }
    }

    fn to_value(&self) -> Value {
        match self {
            CoefficientSpec::Preset(Preset::LinearDelay { a }) => {
                serde_json::json!({ "preset": "linear-delay", "a": a })
            }
            CoefficientSpec::Preset(Preset::NeutralLinear { kappa }) => {
                serde_json::json!({ "preset": "neutral-linear", "kappa": kappa })
            }
            CoefficientSpec::Preset(p) => Value::String(p.name().to_string()),
            CoefficientSpec::Affine(spec) => {
                serde_json::json!({ "affine": serde_json::to_value(spec).expect("affine spec serializes") })
            }
        }
    }
}

/// Control path description, expanded on the experiment mesh.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlConfig {
    #[default]
    Zero,
    Constant {
        value: Vec<f64>,
    },
    /// `hdot = scale * Z / sqrt(step)` from stream `stream` of the run seed.
    Rough {
        scale: f64,
        stream: u64,
    },
    /// Explicit `hdot`, slot-major, `n_forward * dim` entries.
    Hdot {
        values: Vec<f64>,
    },
}

impl ControlConfig {
    pub fn build(&self, mesh: &TimeMesh, dim: usize, seed: u64) -> nsfde::Result<ControlPath> {
        match self {
            ControlConfig::Zero => Ok(ControlPath::zeros(mesh, dim)),
            ControlConfig::Constant { value } => {
                if value.len() != dim {
                    return Err(nsfde::Error::DimensionMismatch {
                        expected: dim,
                        got: value.len(),
                    });
                }
                Ok(ControlPath::constant(mesh, value))
            }
            ControlConfig::Rough { scale, stream } => {
                Ok(ControlPath::rough(mesh, dim, *scale, NoiseSeed::new(seed, *stream)))
            }
            ControlConfig::Hdot { values } => ControlPath::from_hdot(mesh, dim, values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventConfig {
    EndpointBall {
        center: Vec<f64>,
        radius: f64,
    },
    EndpointHalfspace {
        normal: Vec<f64>,
        level: f64,
    },
    /// Tube of the given radius around the skeleton path of `around`.
    SupTube {
        #[serde(default)]
        around: ControlConfig,
        radius: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawMesh {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_tau: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawRate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_inner: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawStroock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// The document as written; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<RawMesh>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(rename = "R_list", skip_serializing_if = "Option::is_none")]
    pub r_list: Option<Vec<f64>>,
    #[serde(rename = "m_R", skip_serializing_if = "Option::is_none")]
    pub m_r: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<EventConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stroock: Option<RawStroock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RawRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// A validated configuration with all defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Absent only for `stroock`.
    pub coefficients: Option<CoefficientSpec>,
    pub dim: usize,
    pub mesh: TimeMesh,
    /// Constant initial segment.
    pub initial: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub r_list: Vec<f64>,
    pub m_r: Option<Vec<f64>>,
    pub samples: u64,
    pub seed: u64,
    pub output_path: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub event: Option<EventConfig>,
    pub delta: Option<f64>,
    pub lemma: Option<Lemma>,
    pub control: ControlConfig,
    pub stroock: Option<StroockSetup>,
    pub rate: RateOptions,
    pub rate_source: RateSource,
    pub paths: u64,
    pub trials: usize,
    pub steps: usize,
}

impl ExperimentConfig {
    pub fn neutral_tol(&self) -> f64 {
        self.tolerances["neutral_tol"]
    }

    pub fn initial_segment(&self) -> Segment {
        Segment::constant(&self.mesh, &self.initial)
    }

    /// The fully explicit raw form; `validate(cfg.to_raw()) == cfg`.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            experiment: Some(self.experiment.name().to_string()),
            coefficients: self.coefficients.as_ref().map(CoefficientSpec::to_value),
            dim: Some(self.dim),
            mesh: Some(RawMesh {
                tau: Some(self.mesh.tau()),
                horizon: Some(self.mesh.horizon()),
                steps_per_tau: Some(self.mesh.n_history()),
            }),
            initial: Some(self.initial.clone()),
            eps_list: Some(self.eps_list.clone()),
            n_list: Some(self.n_list.clone()),
            r_list: Some(self.r_list.clone()),
            m_r: self.m_r.clone(),
            samples: Some(self.samples),
            seed: Some(self.seed),
            output_path: self.output_path.clone(),
            tolerances: Some(self.tolerances.clone()),
            event: self.event.clone(),
            delta: self.delta,
            lemma: self.lemma.map(|l| l.name().to_string()),
            control: Some(self.control.clone()),
            stroock: self.stroock.map(|s| RawStroock {
                a: Some(s.a),
                b: Some(s.b),
                r: Some(s.r),
                t: Some(s.t),
                dim: Some(s.dim),
            }),
            rate: Some(RawRate {
                starts: Some(self.rate.starts),
                penalty_start: Some(self.rate.penalty_start),
                penalty_max: Some(self.rate.penalty_max),
                max_outer: Some(self.rate.max_outer),
                max_inner: Some(self.rate.max_inner),
            }),
            rate_source: Some(self.rate_source.name().to_string()),
            paths: Some(self.paths),
            trials: Some(self.trials),
            steps: Some(self.steps),
        }
    }

    /// Canonical JSON of [`Self::to_raw`]; the input of the config digest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("raw config serializes")
    }
}

/// Malformed input: not UTF-8, not JSON, or a field of the wrong type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// All semantic problems found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem(s))", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Parses the document without semantic checks.
pub fn parse_raw(bytes: &[u8]) -> Result<RawConfig, ParseError> {
    if let Err(e) = std::str::from_utf8(bytes) {
        let upto = &bytes[..e.valid_up_to()];
        let line = upto.iter().filter(|b| **b == b'\n').count() + 1;
        let column = upto.len() - upto.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1) + 1;
        return Err(ParseError {
            line,
            column,
            message: "input is not valid UTF-8".into(),
        });
    }
    serde_json::from_slice(bytes).map_err(|e| ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(bytes: &[u8]) -> Result<ExperimentConfig, ConfigError> {
    Ok(validate(parse_raw(bytes)?)?)
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn parse_coefficients(value: &Value, errs: &mut Collector) -> Option<CoefficientSpec> {
    let field = "coefficients";
    let unknown_preset = |name: &str| format!("unknown preset `{name}`; expected one of {}", PRESET_NAMES.join(", "));
    match value {
        Value::String(name) => match Preset::from_str(name) {
            Ok(p) => Some(CoefficientSpec::Preset(p)),
            Err(_) => {
                errs.push(field, unknown_preset(name));
                None
            }
        },
        Value::Object(map) if map.contains_key("affine") => {
            if map.len() != 1 {
                errs.push(field, "inline coefficients take only the `affine` key");
            }
            match serde_json::from_value::<AffineSpec>(map["affine"].clone()) {
                Ok(spec) => Some(CoefficientSpec::Affine(spec)),
                Err(e) => {
                    errs.push(field, format!("invalid affine coefficients: {e}"));
                    None
                }
            }
        }
        Value::Object(map) => parse_preset_object(map, errs, &unknown_preset),
        _ => {
            errs.push(field, "expected a preset name, {\"preset\": ...} or {\"affine\": ...}");
            None
        }
    }
}

fn parse_preset_object(
    map: &Map<String, Value>,
    errs: &mut Collector,
    unknown_preset: &dyn Fn(&str) -> String,
) -> Option<CoefficientSpec> {
    let field = "coefficients";
    let Some(name) = map.get("preset").and_then(Value::as_str) else {
        errs.push(field, "object form needs a string `preset` or an `affine` key");
        return None;
    };
    let mut preset = match Preset::from_str(name) {
        Ok(p) => p,
        Err(_) => {
            errs.push(field, unknown_preset(name));
            return None;
        }
    };
    let allowed: &[&str] = match preset {
        Preset::LinearDelay { .. } => &["preset", "a"],
        Preset::NeutralLinear { .. } => &["preset", "kappa"],
        _ => &["preset"],
    };
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            errs.push(field, format!("preset `{name}` takes no parameter `{key}`"));
        }
    }
    let number = |key: &str, errs: &mut Collector| -> Option<f64> {
        let v = map.get(key)?;
        let x = v.as_f64().filter(|x| x.is_finite());
        if x.is_none() {
            errs.push(field, format!("`{key}` must be a finite number"));
        }
        x
    };
    match &mut preset {
        Preset::LinearDelay { a } => {
            if let Some(x) = number("a", errs) {
                *a = x;
            }
        }
        Preset::NeutralLinear { kappa } => {
            if let Some(x) = number("kappa", errs) {
                if (0.0..1.0).contains(&x) {
                    *kappa = x;
                } else {
                    errs.push(field, "`kappa` must lie in [0, 1)");
                }
            }
        }
        _ => {}
    }
    Some(CoefficientSpec::Preset(preset))
}

fn check_event(event: &EventConfig, dim: usize, mesh: Option<&TimeMesh>, seed: u64, errs: &mut Collector) {
    let field = "event";
    let dim_msg = |what: &str, got: usize| format!("{what} has {got} entries, expected {dim}");
    match event {
        EventConfig::EndpointBall { center, radius } => {
            if center.len() != dim {
                errs.push(field, dim_msg("center", center.len()));
            }
            if !positive(*radius) {
                errs.push(field, "radius must be positive");
            }
        }
        EventConfig::EndpointHalfspace { normal, level } => {
            if normal.len() != dim {
                errs.push(field, dim_msg("normal", normal.len()));
            }
            if normal.iter().all(|x| *x == 0.0) || normal.iter().any(|x| !x.is_finite()) || !level.is_finite() {
                errs.push(field, "half-space needs a finite non-zero normal and a finite level");
            }
        }
        EventConfig::SupTube { around, radius } => {
            if !positive(*radius) {
                errs.push(field, "radius must be positive");
            }
            if let Some(m) = mesh {
                if let Err(e) = around.build(m, dim, seed) {
                    errs.push(field, format!("tube control: {e}"));
                }
            }
        }
    }
}

/// Checks a raw configuration and fills defaults.
pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, ValidationError> {
    let mut errs = Collector(Vec::new());

    let experiment = match raw.experiment.as_deref() {
        None => {
            errs.push("experiment", "missing");
            None
        }
        Some(s) => match Experiment::from_str(s) {
            Ok(e) => Some(e),
            Err(msg) => {
                errs.push("experiment", msg);
                None
            }
        },
    };

    let seed = raw.seed;
    if seed.is_none() {
        errs.push("seed", "missing; runs are never seeded from the clock");
    }
    let seed_or_zero = seed.unwrap_or(0);

    let raw_mesh = raw.mesh.clone().unwrap_or_default();
    let mesh = match make_mesh(
        raw_mesh.tau.unwrap_or(1.0),
        raw_mesh.horizon.unwrap_or(1.0),
        raw_mesh.steps_per_tau.unwrap_or(100),
    ) {
        Ok(m) => Some(m),
        Err(e) => {
            errs.push("mesh", e.to_string());
            None
        }
    };

    let needs_coefficients = experiment != Some(Experiment::Stroock);
    let coefficients = match &raw.coefficients {
        Some(v) => parse_coefficients(v, &mut errs),
        None => {
            if needs_coefficients && experiment.is_some() {
                errs.push("coefficients", "missing");
            }
            None
        }
    };

    let stroock = match (&raw.stroock, experiment) {
        (Some(s), _) => {
            let missing: Vec<&str> = [("a", s.a.is_none()), ("r", s.r.is_none()), ("t", s.t.is_none())]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(n, _)| *n)
                .collect();
            if !missing.is_empty() {
                errs.push("stroock", format!("missing {}", missing.join(", ")));
                None
            } else {
                let setup = StroockSetup {
                    a: s.a.unwrap_or(1.0),
                    b: s.b.unwrap_or(0.0),
                    r: s.r.unwrap_or(1.0),
                    t: s.t.unwrap_or(1.0),
                    dim: s.dim.unwrap_or(1),
                };
                if !(positive(setup.a) && positive(setup.r) && positive(setup.t)) || setup.dim == 0 {
                    errs.push("stroock", "a, r, t must be positive and dim at least 1");
                } else if !(setup.b >= 0.0 && setup.b.is_finite()) {
                    errs.push("stroock", "b must be finite and non-negative");
                } else if let Err(e) = stroock_bound(&setup) {
                    errs.push("stroock", e.to_string());
                }
                Some(setup)
            }
        }
        (None, Some(Experiment::Stroock)) => {
            errs.push("stroock", "missing");
            None
        }
        (None, _) => None,
    };

    let dim = match (&coefficients, raw.dim) {
        (Some(CoefficientSpec::Affine(spec)), d) => {
            if spec.dim() == 0 {
                errs.push("coefficients", "affine diffusion matrix is empty");
            }
            if let Some(d) = d {
                if d != spec.dim() {
                    errs.push("dim", format!("{d} disagrees with the affine coefficients ({})", spec.dim()));
                }
            }
            spec.dim().max(1)
        }
        (_, Some(0)) => {
            errs.push("dim", "must be at least 1");
            1
        }
        (None, None) if experiment == Some(Experiment::Stroock) => stroock.map_or(1, |s| s.dim),
        (_, d) => d.unwrap_or(1),
    };
    if let Some(c) = &coefficients {
        if let Err(e) = c.build(dim) {
            errs.push("coefficients", e.to_string());
        }
    }

    let initial = raw.initial.clone().unwrap_or_else(|| vec![0.0; dim]);
    if initial.len() != dim {
        errs.push("initial", format!("has {} entries, expected {dim}", initial.len()));
    }
    if initial.iter().any(|x| !x.is_finite()) {
        errs.push("initial", "entries must be finite");
    }

    let lemma = match (&raw.lemma, experiment) {
        (Some(s), _) => match Lemma::from_str(s) {
            Ok(l) => Some(l),
            Err(msg) => {
                errs.push("lemma", msg);
                None
            }
        },
        (None, Some(Experiment::LdpVerify)) => {
            errs.push("lemma", "missing");
            None
        }
        (None, _) => None,
    };

    let eps_list = raw.eps_list.clone().unwrap_or_else(|| vec![1.0]);
    let eps_experiment = matches!(
        experiment,
        Some(Experiment::Simulate | Experiment::LdpVerify | Experiment::Compare)
    );
    if eps_experiment && eps_list.is_empty() {
        errs.push("eps_list", "must be non-empty");
    }
    if matches!(experiment, Some(Experiment::LdpVerify | Experiment::Compare)) {
        if raw.eps_list.is_none() {
            errs.push("eps_list", "missing");
        }
        if eps_list.iter().any(|e| !positive(*e)) {
            errs.push("eps_list", "entries must be positive (eps * ln P is undefined at eps = 0)");
        }
    } else if eps_list.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        errs.push("eps_list", "entries must be finite and non-negative");
    }

    let n_list = raw.n_list.clone().unwrap_or_default();
    if lemma == Some(Lemma::ExponentialCloseness) && n_list.is_empty() {
        errs.push("n_list", "must be non-empty for exponential-closeness");
    }
    if let Some(m) = &mesh {
        for &n in &n_list {
            if let Err(e) = m.freeze_stride(n) {
                errs.push("n_list", e.to_string());
            }
        }
    }

    let r_list = raw.r_list.clone().unwrap_or_default();
    if matches!(lemma, Some(Lemma::Tightness | Lemma::TruncationCloseness)) && r_list.is_empty() {
        errs.push("R_list", "must be non-empty for this lemma");
    }
    if r_list.iter().any(|r| !positive(*r)) {
        errs.push("R_list", "entries must be positive");
    }
    if let Some(m_r) = &raw.m_r {
        if m_r.len() != r_list.len() {
            errs.push("m_R", format!("has {} entries, R_list has {}", m_r.len(), r_list.len()));
        }
        if m_r.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            errs.push("m_R", "entries must be finite and non-negative");
        }
    }

    let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        errs.push("samples", "must be at least 1");
    }

    let needs_delta = matches!(lemma, Some(Lemma::ExponentialCloseness | Lemma::TruncationCloseness));
    match raw.delta {
        Some(d) if !positive(d) => errs.push("delta", "must be positive"),
        None if needs_delta => errs.push("delta", "missing"),
        _ => {}
    }

    let control = raw.control.clone().unwrap_or_default();
    if let Some(m) = &mesh {
        if let Err(e) = control.build(m, dim, seed_or_zero) {
            errs.push("control", e.to_string());
        }
    }

    match (&raw.event, experiment) {
        (Some(ev), _) => check_event(ev, dim, mesh.as_ref(), seed_or_zero, &mut errs),
        (None, Some(Experiment::Rate | Experiment::Compare)) => errs.push("event", "missing"),
        _ => {}
    }

    let mut tolerances: BTreeMap<String, f64> = BTreeMap::new();
    let defaults = RateOptions::default();
    tolerances.insert("neutral_tol".into(), DEFAULT_NEUTRAL_TOL);
    tolerances.insert("residual_tol".into(), defaults.residual_tol);
    tolerances.insert("relative_tol".into(), defaults.relative_tol);
    tolerances.insert("fd_step".into(), defaults.fd_step);
    for (k, v) in raw.tolerances.clone().unwrap_or_default() {
        if !TOLERANCE_KEYS.contains(&k.as_str()) {
            errs.push("tolerances", format!("unknown key `{k}`; expected one of {}", TOLERANCE_KEYS.join(", ")));
        } else if !positive(v) {
            errs.push("tolerances", format!("`{k}` must be positive"));
        } else {
            tolerances.insert(k, v);
        }
    }

    let raw_rate = raw.rate.clone().unwrap_or_default();
    let rate = RateOptions {
        starts: raw_rate.starts.unwrap_or(defaults.starts),
        penalty_start: raw_rate.penalty_start.unwrap_or(defaults.penalty_start),
        penalty_max: raw_rate.penalty_max.unwrap_or(defaults.penalty_max),
        residual_tol: tolerances["residual_tol"],
        relative_tol: tolerances["relative_tol"],
        fd_step: tolerances["fd_step"],
        max_outer: raw_rate.max_outer.unwrap_or(defaults.max_outer),
        max_inner: raw_rate.max_inner.unwrap_or(defaults.max_inner),
        seed: seed_or_zero,
        neutral_tol: tolerances["neutral_tol"],
    };
    if let Err(e) = rate.validate() {
        errs.push("rate", e.to_string());
    }

    let rate_source = match raw.rate_source.as_deref() {
        None | Some("optimizer") => RateSource::Optimizer,
        Some("oracle") => RateSource::Oracle,
        Some(other) => {
            errs.push("rate_source", format!("unknown source `{other}`; expected optimizer or oracle"));
            RateSource::Optimizer
        }
    };
    if rate_source == RateSource::Oracle {
        let affine = coefficients.as_ref().and_then(|c| c.affine(dim)).is_some();
        if !affine {
            errs.push("rate_source", "the oracle needs affine coefficients");
        }
        let endpoint_ok = match &raw.event {
            Some(EventConfig::EndpointBall { .. }) => true,
            Some(EventConfig::EndpointHalfspace { .. }) => dim == 1,
            _ => false,
        };
        if !endpoint_ok {
            errs.push("rate_source", "the oracle needs an endpoint ball, or a half-space in one dimension");
        }
    }

    let paths = raw.paths.unwrap_or(1);
    if paths == 0 {
        errs.push("paths", "must be at least 1");
    }
    let trials = raw.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        errs.push("trials", "must be at least 1");
    }
    let steps = raw.steps.unwrap_or(DEFAULT_STROOCK_STEPS);
    if steps == 0 {
        errs.push("steps", "must be at least 1");
    }
    if let Some(p) = &raw.output_path {
        if p.is_empty() {
            errs.push("output_path", "must not be empty");
        }
    }

    if !errs.0.is_empty() {
        return Err(ValidationError { violations: errs.0 });
    }
    Ok(ExperimentConfig {
        experiment: experiment.expect("checked"),
        coefficients,
        dim,
        mesh: mesh.expect("checked"),
        initial,
        eps_list,
        n_list,
        r_list,
        m_r: raw.m_r,
        samples,
        seed: seed.expect("checked"),
        output_path: raw.output_path,
        tolerances,
        event: raw.event,
        delta: raw.delta,
        lemma,
        control,
        stroock,
        rate,
        rate_source,
        paths,
        trials,
        steps,
    })
}
