//! Experiment configuration: TOML documents holding one experiment at the top
//! level or a list of `[[experiment]]` tables.
//!
//! Parsing happens in two stages. [`RawExperiment`] mirrors the file with
//! every key optional; [`RawExperiment::resolve`] checks that the keys fit the
//! experiment kind, applies defaults and produces an [`Experiment`] in which
//! every value the run depends on is explicit. The canonical JSON of the
//! resolved experiments is what the run manifest hashes.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use gtwalk_core::comparison::{beta, DriftProfile, FELLER_STEP};
use gtwalk_core::walk::Schedule;
use gtwalk_core::{ManifoldModel, Point};
use serde::{Deserialize, Serialize, Serializer};

use crate::descriptor::ManifoldDescriptor;

/// A configuration problem, located by its key path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Walk,
    Couple,
    VerifyCouplingBound,
    VerifyContraction,
    VerifyGradient,
    Convergence,
    FellerTest,
    OuSurvival,
    RadialDomination,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Walk,
        ExperimentKind::Couple,
        ExperimentKind::VerifyCouplingBound,
        ExperimentKind::VerifyContraction,
        ExperimentKind::VerifyGradient,
        ExperimentKind::Convergence,
        ExperimentKind::FellerTest,
        ExperimentKind::OuSurvival,
        ExperimentKind::RadialDomination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Walk => "walk",
            ExperimentKind::Couple => "couple",
            ExperimentKind::VerifyCouplingBound => "verify-coupling-bound",
            ExperimentKind::VerifyContraction => "verify-contraction",
            ExperimentKind::VerifyGradient => "verify-gradient",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::FellerTest => "feller-test",
            ExperimentKind::OuSurvival => "ou-survival",
            ExperimentKind::RadialDomination => "radial-domination",
        }
    }

    /// Keys accepted besides `id` and `kind`.
    fn keys(self) -> &'static [&'static str] {
        const COUPLE: &[&str] = &[
            "manifold", "t1", "t2", "alpha", "n_paths", "seed", "k", "start", "start2", "d0", "delta_couple",
            "stick",
        ];
        match self {
            ExperimentKind::Walk => &[
                "manifold", "t1", "t2", "alpha", "n_paths", "seed", "start", "reference", "exit_radius",
                "dump_paths",
            ],
            ExperimentKind::Couple => &[
                "manifold", "t1", "t2", "alpha", "n_paths", "seed", "k", "start", "start2", "d0", "delta_couple",
                "stick", "coupling", "dump_paths",
            ],
            ExperimentKind::VerifyCouplingBound => COUPLE,
            ExperimentKind::VerifyContraction => &[
                "manifold", "t1", "t2", "alpha", "n_paths", "seed", "k", "start", "start2", "d0", "delta_couple",
                "stick", "contraction_c",
            ],
            ExperimentKind::VerifyGradient => &[
                "manifold", "t1", "t2", "alpha", "n_paths", "seed", "k", "start", "start2", "d0", "delta_couple",
                "stick", "test_function",
            ],
            ExperimentKind::Convergence => &[
                "manifold", "t1", "t2", "alpha", "alphas", "n_paths", "seed", "start", "summary", "component",
                "reference_law", "ks_level",
            ],
            ExperimentKind::FellerTest => &["b", "c0", "r0", "feller_c", "y_max", "h", "expect"],
            ExperimentKind::OuSurvival => &["t1", "t2", "n_paths", "seed", "a", "k", "h"],
            ExperimentKind::RadialDomination => &[
                "manifold", "t1", "t2", "alpha", "n_paths", "seed", "k", "start", "start2", "d0", "delta_couple",
                "stick", "reference", "exit_radius", "process", "b", "c0", "r0", "margin", "max_violation_fraction",
            ],
        }
    }

    fn is_stochastic(self) -> bool {
        self != ExperimentKind::FellerTest
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingChoice {
    Reflection,
    ParallelTransport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryChoice {
    Coordinate,
    Angle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceLawChoice {
    Normal,
    WrappedGaussian,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Survives,
    Explodes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessChoice {
    Radial,
    Chain,
}

/// `f = 1{x[axis] > offset}` in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    HalfSpace {
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        offset: f64,
    },
}

impl TestFunction {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            TestFunction::HalfSpace { axis, offset } => f64::from(u8::from(x.coords[*axis] > *offset)),
        }
    }

    pub fn oscillation(&self) -> f64 {
        1.0
    }
}

/// Drift profile `b`: `zero`, `constant(c)`, `linear` / `linear(slope)`, or a
/// table `{ xs = [...], ys = [...] }`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "toml::Value")]
pub struct DriftSpec(pub DriftProfile);

impl TryFrom<toml::Value> for DriftSpec {
    type Error = String;

    fn try_from(v: toml::Value) -> Result<Self, String> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Table {
            xs: Vec<f64>,
            ys: Vec<f64>,
        }
        let profile = match v {
            toml::Value::String(s) => parse_drift(&s)?,
            toml::Value::Table(_) => {
                let t: Table = v.try_into().map_err(|e: toml::de::Error| e.message().to_string())?;
                DriftProfile::Table { xs: t.xs, ys: t.ys }
            }
            other => return Err(format!("expected a drift name or table, found {}", other.type_str())),
        };
        profile.validate().map_err(|e| e.to_string())?;
        Ok(DriftSpec(profile))
    }
}

fn parse_drift(s: &str) -> Result<DriftProfile, String> {
    let s = s.trim();
    let (name, arg) = match s.split_once('(') {
        Some((n, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("missing `)` in drift `{s}`"))?;
            let x: f64 = inner
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not a number", inner.trim()))?;
            (n.trim(), Some(x))
        }
        None => (s, None),
    };
    match (name, arg) {
        ("zero", None) => Ok(DriftProfile::Zero),
        ("constant", Some(c)) => Ok(DriftProfile::Constant(c)),
        ("linear", slope) => Ok(DriftProfile::Linear(slope.unwrap_or(1.0))),
        _ => Err(format!(
            "unknown drift `{s}` (expected zero, constant(c), linear, linear(slope) or a table)"
        )),
    }
}

impl Serialize for DriftSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            DriftProfile::Zero => s.serialize_str("zero"),
            DriftProfile::Constant(c) => s.serialize_str(&format!("constant({c:?})")),
            DriftProfile::Linear(k) => s.serialize_str(&format!("linear({k:?})")),
            DriftProfile::Table { xs, ys } => {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("xs", xs)?;
                m.serialize_entry("ys", ys)?;
                m.end()
            }
        }
    }
}

/// One experiment as written in the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start2: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_couple: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stick: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_law: Option<ReferenceLawChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<DriftSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feller_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_paths: Option<usize>,
}

/// Command-line values that replace the corresponding keys of every
/// experiment they apply to.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub manifold: Option<ManifoldDescriptor>,
}

impl Overrides {
    pub fn apply(&self, raw: &mut RawExperiment) {
        let Some(kind) = raw.kind else { return };
        let keys = kind.keys();
        if let Some(a) = self.alpha.filter(|_| keys.contains(&"alpha")) {
            raw.alpha = Some(a);
            raw.alphas = None;
        }
        if let Some(n) = self.samples.filter(|_| keys.contains(&"n_paths")) {
            raw.n_paths = Some(n);
        }
        if let Some(s) = self.seed.filter(|_| keys.contains(&"seed")) {
            raw.seed = Some(s);
        }
        if let Some(m) = self.manifold.as_ref().filter(|_| keys.contains(&"manifold")) {
            raw.manifold = Some(m.clone());
        }
    }
}

/// Walk parameters shared by several experiment kinds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkSpec {
    pub manifold: ManifoldDescriptor,
    pub t1: f64,
    pub t2: f64,
    pub alpha: f64,
    pub start: Vec<f64>,
    pub reference: Vec<f64>,
    pub exit_radius: f64,
}

/// Coupled-walk parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupleSpec {
    pub manifold: ManifoldDescriptor,
    pub t1: f64,
    pub t2: f64,
    pub alpha: f64,
    pub k: f64,
    pub start: Vec<f64>,
    pub start2: Vec<f64>,
    pub delta_couple: f64,
    pub stick: bool,
    pub coupling: CouplingChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialSpec {
    pub b: DriftSpec,
    pub c0: f64,
    pub r0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "process", rename_all = "kebab-case")]
pub enum DominationProcess {
    Radial { walk: WalkSpec, comparison: RadialSpec },
    Chain { couple: CoupleSpec, reference: Vec<f64>, exit_radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Spec {
    Walk {
        walk: WalkSpec,
        dump_paths: usize,
    },
    Couple {
        couple: CoupleSpec,
        dump_paths: usize,
    },
    VerifyCouplingBound {
        couple: CoupleSpec,
    },
    VerifyContraction {
        couple: CoupleSpec,
        contraction_c: f64,
    },
    VerifyGradient {
        couple: CoupleSpec,
        test_function: TestFunction,
    },
    Convergence {
        manifold: ManifoldDescriptor,
        t1: f64,
        t2: f64,
        alphas: Vec<f64>,
        start: Vec<f64>,
        summary: SummaryChoice,
        component: usize,
        reference_law: ReferenceLawChoice,
        ks_level: f64,
    },
    FellerTest {
        comparison: RadialSpec,
        feller_c: f64,
        y_max: f64,
        h: f64,
        expect: Option<Expectation>,
    },
    OuSurvival {
        a: f64,
        k: f64,
        t1: f64,
        t2: f64,
        h: f64,
    },
    RadialDomination {
        #[serde(flatten)]
        process: DominationProcess,
        margin: f64,
        max_violation_fraction: f64,
    },
}

/// A validated experiment with every default made explicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Experiment {
    pub id: String,
    pub seed: u64,
    pub n_paths: usize,
    #[serde(flatten)]
    pub spec: Spec,
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self.spec {
            Spec::Walk { .. } => ExperimentKind::Walk,
            Spec::Couple { .. } => ExperimentKind::Couple,
            Spec::VerifyCouplingBound { .. } => ExperimentKind::VerifyCouplingBound,
            Spec::VerifyContraction { .. } => ExperimentKind::VerifyContraction,
            Spec::VerifyGradient { .. } => ExperimentKind::VerifyGradient,
            Spec::Convergence { .. } => ExperimentKind::Convergence,
            Spec::FellerTest { .. } => ExperimentKind::FellerTest,
            Spec::OuSurvival { .. } => ExperimentKind::OuSurvival,
            Spec::RadialDomination { .. } => ExperimentKind::RadialDomination,
        }
    }
}

/// The experiments of one document, in file order, and the output directory
/// it names, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct Suite {
    pub experiments: Vec<Experiment>,
    pub out: Option<PathBuf>,
}

impl Suite {
    /// Canonical JSON of the resolved experiments.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.experiments).expect("resolved experiments serialize")
    }
}

pub const DEFAULT_N_PATHS: usize = 1000;
pub const DEFAULT_EXIT_RADIUS: f64 = 8.0;

/// Parses and resolves a configuration document.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<Suite, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("config", e))?;
    let out = match table.remove("out") {
        None => None,
        Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => return Err(ConfigError::new("out", format!("expected a path, found {}", v.type_str()))),
    };
    let raws: Vec<(String, toml::Value)> = match table.remove("experiment") {
        Some(toml::Value::Array(items)) => {
            if let Some(key) = table.keys().next() {
                return Err(ConfigError::new(
                    key.clone(),
                    "unknown top-level key in a suite (only `out` and `experiment` are allowed)",
                ));
            }
            items
                .into_iter()
                .enumerate()
                .map(|(i, v)| (format!("experiment[{i}]"), v))
                .collect()
        }
        Some(_) => return Err(ConfigError::new("experiment", "expected a list of `[[experiment]]` tables")),
        None => vec![(String::new(), toml::Value::Table(table))],
    };
    if raws.is_empty() {
        return Err(ConfigError::new("experiment", "the suite is empty"));
    }
    let single = raws.len() == 1 && raws[0].0.is_empty();
    let mut experiments = Vec::with_capacity(raws.len());
    let mut ids = BTreeSet::new();
    for (i, (prefix, value)) in raws.into_iter().enumerate() {
        let mut raw: RawExperiment = serde_path_to_error::deserialize(value).map_err(|e| {
            let key = e.path().to_string();
            let path = join(&prefix, if key == "." { "" } else { &key });
            ConfigError::new(if path.is_empty() { "config".into() } else { path }, e.into_inner().message())
        })?;
        overrides.apply(&mut raw);
        let default_id = if single {
            None
        } else {
            Some(format!("{}-{i}", raw.kind.map_or("experiment", ExperimentKind::name)))
        };
        let exp = raw.resolve_with_id(default_id).map_err(|mut e| {
            e.path = join(&prefix, &e.path);
            e
        })?;
        if !ids.insert(exp.id.clone()) {
            return Err(ConfigError::new(join(&prefix, "id"), format!("duplicate id `{}`", exp.id)));
        }
        experiments.push(exp);
    }
    Ok(Suite { experiments, out })
}

fn join(prefix: &str, key: &str) -> String {
    match (prefix.is_empty(), key.is_empty()) {
        (true, _) => key.to_string(),
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{key}"),
    }
}

fn err<T>(key: &str, msg: impl fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError::new(key, msg))
}

fn required<T: Clone>(v: &Option<T>, key: &str, kind: ExperimentKind) -> Result<T, ConfigError> {
    match v {
        Some(x) => Ok(x.clone()),
        None => err(key, format!("missing field required by kind `{kind}`")),
    }
}

fn positive(v: f64, key: &str) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        err(key, format!("{v} must be positive and finite"))
    }
}

fn finite(v: f64, key: &str) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        err(key, format!("{v} must be finite"))
    }
}

fn point_on(model: &ManifoldModel, coords: &[f64], key: &str) -> Result<Point, ConfigError> {
    if coords.len() != model.ambient_dim() {
        return err(
            key,
            format!("expected {} coordinates, found {}", model.ambient_dim(), coords.len()),
        );
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return err(key, "coordinates must be finite");
    }
    let p = Point::new(coords);
    let r = model.constraint_residual(&p);
    if r > 1e-9 {
        return err(key, format!("point is off the manifold (residual {r:.3e})"));
    }
    Ok(p)
}

impl RawExperiment {
    /// Resolves a single experiment with the default id (its kind).
    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        self.resolve_with_id(None)
    }

    fn present_keys(&self) -> Vec<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }

    fn resolve_with_id(&self, default_id: Option<String>) -> Result<Experiment, ConfigError> {
        let kind = required(&self.kind, "kind", ExperimentKind::Walk).map_err(|_| {
            ConfigError::new(
                "kind",
                "missing field (one of walk, couple, verify-coupling-bound, verify-contraction, verify-gradient, convergence, feller-test, ou-survival, radial-domination)",
            )
        })?;
        let allowed = kind.keys();
        for key in self.present_keys() {
            if key != "id" && key != "kind" && !allowed.contains(&key.as_str()) {
                return err(&key, format!("key does not apply to kind `{kind}`"));
            }
        }
        if self.alpha.is_some() && self.alphas.is_some() {
            return err("alphas", "give either `alpha` or `alphas`, not both");
        }
        if self.start2.is_some() && self.d0.is_some() {
            return err("d0", "give either `start2` or `d0`, not both");
        }
        let id = self
            .id
            .clone()
            .or(default_id)
            .unwrap_or_else(|| kind.name().to_string());
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) {
            return err("id", format!("`{id}` must be non-empty and use only letters, digits, `-`, `_` or `.`"));
        }
        let seed = if kind.is_stochastic() {
            required(&self.seed, "seed", kind)?
        } else {
            0
        };
        let n_paths = if kind.is_stochastic() {
            let n = self.n_paths.unwrap_or(DEFAULT_N_PATHS);
            if n == 0 {
                return err("n_paths", "must be at least 1");
            }
            n
        } else {
            0
        };
        let spec = match kind {
            ExperimentKind::Walk => Spec::Walk {
                walk: self.walk_spec(kind)?,
                dump_paths: self.dump_paths(n_paths)?,
            },
            ExperimentKind::Couple => Spec::Couple {
                couple: self.couple_spec(kind, self.coupling.unwrap_or(CouplingChoice::Reflection))?,
                dump_paths: self.dump_paths(n_paths)?,
            },
            ExperimentKind::VerifyCouplingBound => Spec::VerifyCouplingBound {
                couple: self.couple_spec(kind, CouplingChoice::Reflection)?,
            },
            ExperimentKind::VerifyContraction => Spec::VerifyContraction {
                couple: self.couple_spec(kind, CouplingChoice::ParallelTransport)?,
                contraction_c: positive(self.contraction_c.unwrap_or(5.0), "contraction_c")?,
            },
            ExperimentKind::VerifyGradient => {
                let couple = self.couple_spec(kind, CouplingChoice::Reflection)?;
                let test_function = self.test_function.clone().unwrap_or(TestFunction::HalfSpace {
                    axis: 0,
                    offset: 0.0,
                });
                let TestFunction::HalfSpace { axis, offset } = &test_function;
                if *axis >= couple.start.len() {
                    return err("test_function.axis", format!("axis {axis} is out of range"));
                }
                finite(*offset, "test_function.offset")?;
                Spec::VerifyGradient { couple, test_function }
            }
            ExperimentKind::Convergence => self.convergence_spec(kind)?,
            ExperimentKind::FellerTest => {
                let feller_c = positive(self.feller_c.unwrap_or(1.0), "feller_c")?;
                let y_max = self.y_max.unwrap_or(10.0);
                if !(y_max >= 10.0 && y_max.is_finite()) {
                    return err("y_max", format!("{y_max} must be at least 10"));
                }
                let h = self.h.unwrap_or(FELLER_STEP);
                if !(h > 0.0 && h <= 0.1) {
                    return err("h", format!("{h} must lie in (0, 0.1]"));
                }
                Spec::FellerTest {
                    comparison: self.radial_spec()?,
                    feller_c,
                    y_max,
                    h,
                    expect: self.expect,
                }
            }
            ExperimentKind::OuSurvival => {
                let (t1, t2) = self.window()?;
                let h = positive(self.h.unwrap_or(1e-4), "h")?;
                if h > t2 - t1 {
                    return err("h", format!("step {h} exceeds the horizon {}", t2 - t1));
                }
                Spec::OuSurvival {
                    a: finite(required(&self.a, "a", kind)?, "a")?,
                    k: finite(self.k.unwrap_or(0.0), "k")?,
                    t1,
                    t2,
                    h,
                }
            }
            ExperimentKind::RadialDomination => {
                let process = match self.process.unwrap_or(ProcessChoice::Radial) {
                    ProcessChoice::Radial => {
                        for (key, present) in [
                            ("start2", self.start2.is_some()),
                            ("d0", self.d0.is_some()),
                            ("delta_couple", self.delta_couple.is_some()),
                            ("stick", self.stick.is_some()),
                            ("k", self.k.is_some()),
                        ] {
                            if present {
                                return err(key, "key does not apply to the radial process");
                            }
                        }
                        DominationProcess::Radial {
                            walk: self.walk_spec(kind)?,
                            comparison: self.radial_spec()?,
                        }
                    }
                    ProcessChoice::Chain => {
                        for (key, present) in [
                            ("b", self.b.is_some()),
                            ("c0", self.c0.is_some()),
                            ("r0", self.r0.is_some()),
                        ] {
                            if present {
                                return err(key, "key does not apply to the chain process");
                            }
                        }
                        let walk = self.walk_spec(kind)?;
                        DominationProcess::Chain {
                            couple: self.couple_spec(kind, CouplingChoice::Reflection)?,
                            reference: walk.reference,
                            exit_radius: walk.exit_radius,
                        }
                    }
                };
                let default_margin = match process {
                    DominationProcess::Radial { .. } => 0.1,
                    DominationProcess::Chain { .. } => 0.05,
                };
                let frac = self.max_violation_fraction.unwrap_or(0.05);
                if !(frac > 0.0 && frac <= 1.0) {
                    return err("max_violation_fraction", format!("{frac} must lie in (0, 1]"));
                }
                Spec::RadialDomination {
                    process,
                    margin: positive(self.margin.unwrap_or(default_margin), "margin")?,
                    max_violation_fraction: frac,
                }
            }
        };
        Ok(Experiment { id, seed, n_paths, spec })
    }

    fn window(&self) -> Result<(f64, f64), ConfigError> {
        let t1 = finite(self.t1.unwrap_or(0.0), "t1")?;
        let t2 = finite(self.t2.unwrap_or(1.0), "t2")?;
        if !(t2 > t1) {
            return err("t2", format!("t2 = {t2} must exceed t1 = {t1}"));
        }
        Ok((t1, t2))
    }

    fn model(&self, kind: ExperimentKind) -> Result<(ManifoldDescriptor, ManifoldModel, f64, f64), ConfigError> {
        let desc = required(&self.manifold, "manifold", kind)?;
        let (t1, t2) = self.window()?;
        let model = desc.build(t1, t2).map_err(|e| ConfigError::new("manifold", e))?;
        Ok((desc, model, t1, t2))
    }

    fn alpha(&self, kind: ExperimentKind, t1: f64, t2: f64) -> Result<f64, ConfigError> {
        let alpha = required(&self.alpha, "alpha", kind)?;
        check_alpha(alpha, t1, t2, "alpha")
    }

    fn dump_paths(&self, n_paths: usize) -> Result<usize, ConfigError> {
        let d = self.dump_paths.unwrap_or(0);
        if d > n_paths {
            return err("dump_paths", format!("{d} exceeds n_paths = {n_paths}"));
        }
        Ok(d)
    }

    fn start(&self, model: &ManifoldModel) -> Result<Point, ConfigError> {
        match &self.start {
            Some(c) => point_on(model, c, "start"),
            None => Ok(model.origin()),
        }
    }

    fn walk_spec(&self, kind: ExperimentKind) -> Result<WalkSpec, ConfigError> {
        let (manifold, model, t1, t2) = self.model(kind)?;
        let alpha = self.alpha(kind, t1, t2)?;
        let start = self.start(&model)?;
        let reference = match &self.reference {
            Some(c) => point_on(&model, c, "reference")?,
            None => model.origin(),
        };
        let exit_radius = positive(self.exit_radius.unwrap_or(DEFAULT_EXIT_RADIUS), "exit_radius")?;
        if exit_radius <= 1.0 {
            return err("exit_radius", "must exceed 1 (walks stop at distance R − 1)");
        }
        Ok(WalkSpec {
            manifold,
            t1,
            t2,
            alpha,
            start: start.coords.to_vec(),
            reference: reference.coords.to_vec(),
            exit_radius,
        })
    }

    fn couple_spec(&self, kind: ExperimentKind, coupling: CouplingChoice) -> Result<CoupleSpec, ConfigError> {
        let (manifold, model, t1, t2) = self.model(kind)?;
        if !model.is_closed_form() {
            return err("manifold", "coupled walks need a closed-form model (not a numeric chart)");
        }
        let alpha = self.alpha(kind, t1, t2)?;
        let start = self.start(&model)?;
        let start2 = match (&self.start2, self.d0) {
            (Some(c), _) => point_on(&model, c, "start2")?,
            (None, Some(d0)) => {
                let d0 = positive(d0, "d0")?;
                if d0 >= model.injectivity_radius(t1) {
                    return err("d0", format!("{d0} is beyond the injectivity radius"));
                }
                model
                    .offset_point(t1, &start, 0, d0)
                    .map_err(|e| ConfigError::new("d0", e))?
            }
            (None, None) => return err("start2", format!("`start2` or `d0` is required by kind `{kind}`")),
        };
        let delta_couple = positive(self.delta_couple.unwrap_or(2.0 * alpha), "delta_couple")?;
        if delta_couple < alpha * (1.0 - 1e-12) {
            return err("delta_couple", format!("{delta_couple} is below alpha = {alpha}"));
        }
        Ok(CoupleSpec {
            manifold,
            t1,
            t2,
            alpha,
            k: finite(self.k.unwrap_or(0.0), "k")?,
            start: start.coords.to_vec(),
            start2: start2.coords.to_vec(),
            delta_couple,
            stick: self.stick.unwrap_or(true),
            coupling,
        })
    }

    fn radial_spec(&self) -> Result<RadialSpec, ConfigError> {
        let spec = RadialSpec {
            b: self.b.clone().unwrap_or(DriftSpec(DriftProfile::Zero)),
            c0: positive(self.c0.unwrap_or(1.0), "c0")?,
            r0: positive(self.r0.unwrap_or(0.1), "r0")?,
        };
        Ok(spec)
    }

    fn convergence_spec(&self, kind: ExperimentKind) -> Result<Spec, ConfigError> {
        let (manifold, model, t1, t2) = self.model(kind)?;
        let alphas = match (&self.alphas, self.alpha) {
            (Some(list), _) => list.clone(),
            (None, Some(a)) => vec![a],
            (None, None) => return err("alphas", format!("missing field required by kind `{kind}`")),
        };
        if alphas.is_empty() {
            return err("alphas", "must not be empty");
        }
        for (i, a) in alphas.iter().enumerate() {
            check_alpha(*a, t1, t2, &format!("alphas[{i}]"))?;
        }
        if alphas.windows(2).any(|w| !(w[1] < w[0])) {
            return err("alphas", "must be strictly decreasing");
        }
        let start = self.start(&model)?;
        let circle = manifold.is_circle();
        let summary = self
            .summary
            .unwrap_or(if circle { SummaryChoice::Angle } else { SummaryChoice::Coordinate });
        if summary == SummaryChoice::Angle && !circle {
            return err("summary", "`angle` needs a circle");
        }
        if self.component.is_some() && summary != SummaryChoice::Coordinate {
            return err("component", "only applies to the `coordinate` summary");
        }
        let component = self.component.unwrap_or(0);
        if component >= model.ambient_dim() {
            return err("component", format!("{component} is out of range"));
        }
        let flat = normal_variance(&manifold, t2 - t1).is_some();
        let reference_law = self.reference_law.unwrap_or(match summary {
            SummaryChoice::Angle => ReferenceLawChoice::WrappedGaussian,
            SummaryChoice::Coordinate if flat => ReferenceLawChoice::Normal,
            SummaryChoice::Coordinate => ReferenceLawChoice::None,
        });
        match reference_law {
            ReferenceLawChoice::Normal if !(flat && summary == SummaryChoice::Coordinate) => {
                return err("reference_law", "`normal` needs a coordinate of a (scaled) Euclidean model")
            }
            ReferenceLawChoice::WrappedGaussian if summary != SummaryChoice::Angle => {
                return err("reference_law", "`wrapped-gaussian` needs the angle on a circle")
            }
            _ => {}
        }
        let ks_level = self.ks_level.unwrap_or(0.01);
        if !(ks_level > 0.0 && ks_level < 1.0) {
            return err("ks_level", format!("{ks_level} must lie in (0, 1)"));
        }
        Ok(Spec::Convergence {
            manifold,
            t1,
            t2,
            alphas,
            start: start.coords.to_vec(),
            summary,
            component,
            reference_law,
            ks_level,
        })
    }
}

fn check_alpha(alpha: f64, t1: f64, t2: f64, key: &str) -> Result<f64, ConfigError> {
    positive(alpha, key)?;
    Schedule::new(alpha, t1, t2).map_err(|e| ConfigError::new(key, e.to_string()))?;
    Ok(alpha)
}

/// Variance of one coordinate of Brownian motion after `horizon` on a
/// (scaled) Euclidean model: `β(horizon, k)`.
pub fn normal_variance(m: &ManifoldDescriptor, horizon: f64) -> Option<f64> {
    match m {
        ManifoldDescriptor::Euclidean { .. } => Some(horizon),
        ManifoldDescriptor::Scaled { base, k } => match base.as_ref() {
            ManifoldDescriptor::Euclidean { .. } => Some(beta(horizon, *k)),
            _ => None,
        },
        _ => None,
    }
}
