//! Manifold descriptors: `sphere(2)`-style shorthands or tables with a `kind`
//! tag.

use std::fmt;

use gtwalk_core::{ManifoldModel, NumericChart};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub enum ChartKind {
    Flat,
    Sphere,
    FlowSphere,
}

impl ChartKind {
    fn name(&self) -> &'static str {
        match self {
            ChartKind::Flat => "flat",
            ChartKind::Sphere => "sphere",
            ChartKind::FlowSphere => "flow-sphere",
        }
    }
}

/// A manifold model before the time window is attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Value", into = "String")]
pub enum ManifoldDescriptor {
    Euclidean { dim: usize },
    Sphere { dim: usize, radius_c0: f64, flow: bool },
    Hyperbolic { dim: usize },
    Scaled { base: Box<ManifoldDescriptor>, k: f64 },
    Chart { chart: ChartKind, dim: usize, radius_c0: f64 },
}

pub const KINDS: &[(&str, &str)] = &[
    ("euclidean(m)", "flat ℝ^m"),
    ("sphere(m[, c0])", "static round sphere with g = c0·g_unit"),
    ("flow-sphere(m[, c0])", "round sphere under backward Ricci flow, c(t) = c0 + (m−1)(t−t1)"),
    ("circle[(c0)]", "sphere(1, c0)"),
    ("hyperbolic(m)", "hyperbolic space of curvature −1"),
    ("scaled(<manifold>, k)", "g(t) = e^{−k(t−t1)} g_base(t)"),
    ("chart-flat(m)", "numeric chart of ℝ^m"),
    ("chart-sphere(m[, c0])", "stereographic chart of the static sphere"),
    ("chart-flow-sphere(m[, c0])", "stereographic chart of the flow sphere"),
];

impl ManifoldDescriptor {
    pub fn build(&self, t1: f64, t2: f64) -> gtwalk_core::Result<ManifoldModel> {
        match self {
            ManifoldDescriptor::Euclidean { dim } => ManifoldModel::euclidean(*dim, t1, t2),
            ManifoldDescriptor::Sphere { dim, radius_c0, flow } => {
                ManifoldModel::round_sphere(*dim, *radius_c0, *flow, t1, t2)
            }
            ManifoldDescriptor::Hyperbolic { dim } => ManifoldModel::hyperbolic(*dim, t1, t2),
            ManifoldDescriptor::Scaled { base, k } => ManifoldModel::scaled(&base.build(t1, t2)?, *k),
            ManifoldDescriptor::Chart { chart, dim, radius_c0 } => {
                let c = match chart {
                    ChartKind::Flat => NumericChart::flat(*dim),
                    ChartKind::Sphere => NumericChart::stereographic_sphere(*dim, *radius_c0),
                    ChartKind::FlowSphere => NumericChart::stereographic_flow_sphere(*dim, *radius_c0, t1),
                };
                ManifoldModel::numeric_chart(c, t1, t2)
            }
        }
    }

    /// Whether this is `circle`, i.e. a one-dimensional sphere.
    pub fn is_circle(&self) -> bool {
        matches!(self, ManifoldDescriptor::Sphere { dim: 1, .. })
    }

    /// Whether the model is flat Euclidean space with the identity metric.
    pub fn is_plain_euclidean(&self) -> bool {
        matches!(self, ManifoldDescriptor::Euclidean { .. })
    }

    fn check(self) -> Result<Self, String> {
        let dim_ok = |d: usize| {
            if d == 0 {
                Err("dimension must be positive".to_string())
            } else {
                Ok(())
            }
        };
        let c0_ok = |c: f64| {
            if c > 0.0 && c.is_finite() {
                Ok(())
            } else {
                Err(format!("radius_c0 = {c} must be positive"))
            }
        };
        match &self {
            ManifoldDescriptor::Euclidean { dim } | ManifoldDescriptor::Hyperbolic { dim } => dim_ok(*dim)?,
            ManifoldDescriptor::Sphere { dim, radius_c0, .. } | ManifoldDescriptor::Chart { dim, radius_c0, .. } => {
                dim_ok(*dim)?;
                c0_ok(*radius_c0)?;
            }
            ManifoldDescriptor::Scaled { k, .. } => {
                if !k.is_finite() {
                    return Err(format!("k = {k} must be finite"));
                }
            }
        }
        Ok(self)
    }
}

impl fmt::Display for ManifoldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldDescriptor::Euclidean { dim } => write!(f, "euclidean({dim})"),
            ManifoldDescriptor::Sphere { dim, radius_c0, flow } => {
                let name = if *flow { "flow-sphere" } else { "sphere" };
                write!(f, "{name}({dim}, {radius_c0:?})")
            }
            ManifoldDescriptor::Hyperbolic { dim } => write!(f, "hyperbolic({dim})"),
            ManifoldDescriptor::Scaled { base, k } => write!(f, "scaled({base}, {k:?})"),
            ManifoldDescriptor::Chart { chart, dim, radius_c0 } => match chart {
                ChartKind::Flat => write!(f, "chart-flat({dim})"),
                _ => write!(f, "chart-{}({dim}, {radius_c0:?})", chart.name()),
            },
        }
    }
}

impl From<ManifoldDescriptor> for String {
    fn from(d: ManifoldDescriptor) -> String {
        d.to_string()
    }
}

impl std::str::FromStr for ManifoldDescriptor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut p = Parser { src: s, pos: 0 };
        let d = p.descriptor()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(format!("unexpected `{}` in manifold `{s}`", &s[p.pos..]));
        }
        Ok(d)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Table {
    kind: String,
    dim: Option<usize>,
    radius_c0: Option<f64>,
    flow: Option<bool>,
    k: Option<f64>,
    base: Option<toml::Value>,
    chart: Option<String>,
}

impl TryFrom<toml::Value> for ManifoldDescriptor {
    type Error = String;

    fn try_from(v: toml::Value) -> Result<Self, String> {
        match v {
            toml::Value::String(s) => s.parse(),
            toml::Value::Table(_) => {
                let t: Table = v.try_into().map_err(|e: toml::de::Error| e.message().to_string())?;
                from_table(t)
            }
            other => Err(format!(
                "expected a manifold name or table, found {}",
                other.type_str()
            )),
        }
    }
}

fn from_table(t: Table) -> Result<ManifoldDescriptor, String> {
    let need_dim = || t.dim.ok_or_else(|| format!("manifold kind `{}` needs `dim`", t.kind));
    let c0 = t.radius_c0.unwrap_or(1.0);
    let unused = |keys: &[(&str, bool)]| -> Result<(), String> {
        match keys.iter().find(|(_, present)| *present) {
            Some((k, _)) => Err(format!("key `{k}` does not apply to manifold kind `{}`", t.kind)),
            None => Ok(()),
        }
    };
    let d = match t.kind.as_str() {
        "euclidean" | "hyperbolic" => {
            unused(&[
                ("radius_c0", t.radius_c0.is_some()),
                ("flow", t.flow.is_some()),
                ("k", t.k.is_some()),
                ("base", t.base.is_some()),
                ("chart", t.chart.is_some()),
            ])?;
            if t.kind == "euclidean" {
                ManifoldDescriptor::Euclidean { dim: need_dim()? }
            } else {
                ManifoldDescriptor::Hyperbolic { dim: need_dim()? }
            }
        }
        "sphere" | "flow-sphere" | "circle" => {
            unused(&[
                ("k", t.k.is_some()),
                ("base", t.base.is_some()),
                ("chart", t.chart.is_some()),
            ])?;
            let dim = if t.kind == "circle" {
                if t.dim.is_some_and(|d| d != 1) {
                    return Err("a circle has `dim = 1`".into());
                }
                1
            } else {
                need_dim()?
            };
            ManifoldDescriptor::Sphere {
                dim,
                radius_c0: c0,
                flow: t.flow.unwrap_or(t.kind == "flow-sphere"),
            }
        }
        "scaled" => {
            unused(&[
                ("dim", t.dim.is_some()),
                ("radius_c0", t.radius_c0.is_some()),
                ("flow", t.flow.is_some()),
                ("chart", t.chart.is_some()),
            ])?;
            let base = t.base.ok_or("manifold kind `scaled` needs `base`")?;
            let k = t.k.ok_or("manifold kind `scaled` needs `k`")?;
            ManifoldDescriptor::Scaled {
                base: Box::new(ManifoldDescriptor::try_from(base).map_err(|e| format!("base: {e}"))?),
                k,
            }
        }
        "chart" => {
            unused(&[("flow", t.flow.is_some()), ("k", t.k.is_some()), ("base", t.base.is_some())])?;
            let chart = match t.chart.as_deref() {
                Some("flat") => ChartKind::Flat,
                Some("sphere") => ChartKind::Sphere,
                Some("flow-sphere") => ChartKind::FlowSphere,
                Some(other) => {
                    return Err(format!("unknown chart `{other}` (expected flat, sphere or flow-sphere)"))
                }
                None => return Err("manifold kind `chart` needs `chart`".into()),
            };
            ManifoldDescriptor::Chart {
                chart,
                dim: need_dim()?,
                radius_c0: c0,
            }
        }
        other => return Err(unknown_kind(other)),
    };
    d.check()
}

fn unknown_kind(name: &str) -> String {
    format!(
        "unknown manifold kind `{name}` (expected euclidean, sphere, flow-sphere, circle, hyperbolic, scaled, chart-flat, chart-sphere or chart-flow-sphere)"
    )
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

enum Arg {
    Num(f64),
    Manifold(ManifoldDescriptor),
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '+')))
            .unwrap_or(rest.len());
        self.pos += len;
        &self.src[start..start + len]
    }

    fn arg(&mut self) -> Result<Arg, String> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || matches!(c, '-' | '+' | '.') => {
                let w = self.word();
                w.parse::<f64>()
                    .map(Arg::Num)
                    .map_err(|_| format!("`{w}` is not a number"))
            }
            _ => self.descriptor().map(Arg::Manifold),
        }
    }

    fn descriptor(&mut self) -> Result<ManifoldDescriptor, String> {
        let name = self.word().to_ascii_lowercase();
        if name.is_empty() {
            return Err(format!("expected a manifold name in `{}`", self.src));
        }
        let mut args = Vec::new();
        if self.eat('(') && !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return Err(format!("expected `,` or `)` in `{}`", self.src));
                }
            }
        }
        let nums: Vec<f64> = args
            .iter()
            .filter_map(|a| match a {
                Arg::Num(x) => Some(*x),
                Arg::Manifold(_) => None,
            })
            .collect();
        let dim = |i: usize| -> Result<usize, String> {
            let x = *nums
                .get(i)
                .ok_or_else(|| format!("manifold `{name}` needs a dimension"))?;
            if x.fract() == 0.0 && (1.0..=1e6).contains(&x) {
                Ok(x as usize)
            } else {
                Err(format!("dimension {x} of `{name}` is not a positive integer"))
            }
        };
        let arity = |lo: usize, hi: usize| -> Result<(), String> {
            if args.len() < lo || args.len() > hi || nums.len() != args.len() {
                Err(format!("wrong arguments for manifold `{name}`"))
            } else {
                Ok(())
            }
        };
        let d = match name.as_str() {
            "euclidean" => {
                arity(1, 1)?;
                ManifoldDescriptor::Euclidean { dim: dim(0)? }
            }
            "hyperbolic" => {
                arity(1, 1)?;
                ManifoldDescriptor::Hyperbolic { dim: dim(0)? }
            }
            "sphere" | "flow-sphere" => {
                arity(1, 2)?;
                ManifoldDescriptor::Sphere {
                    dim: dim(0)?,
                    radius_c0: nums.get(1).copied().unwrap_or(1.0),
                    flow: name == "flow-sphere",
                }
            }
            "circle" => {
                arity(0, 1)?;
                ManifoldDescriptor::Sphere {
                    dim: 1,
                    radius_c0: nums.first().copied().unwrap_or(1.0),
                    flow: false,
                }
            }
            "chart-flat" => {
                arity(1, 1)?;
                ManifoldDescriptor::Chart {
                    chart: ChartKind::Flat,
                    dim: dim(0)?,
                    radius_c0: 1.0,
                }
            }
            "chart-sphere" | "chart-flow-sphere" => {
                arity(1, 2)?;
                ManifoldDescriptor::Chart {
                    chart: if name == "chart-sphere" {
                        ChartKind::Sphere
                    } else {
                        ChartKind::FlowSphere
                    },
                    dim: dim(0)?,
                    radius_c0: nums.get(1).copied().unwrap_or(1.0),
                }
            }
            "scaled" => match args.as_slice() {
                [Arg::Manifold(base), Arg::Num(k)] => ManifoldDescriptor::Scaled {
                    base: Box::new(base.clone()),
                    k: *k,
                },
                _ => return Err("expected `scaled(<manifold>, k)`".into()),
            },
            other => return Err(unknown_kind(other)),
        };
        d.check()
    }
}
