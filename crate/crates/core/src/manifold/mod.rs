//! Time-dependent Riemannian geometry on model manifolds.
//!
//! A [`ManifoldModel`] is a fixed smooth manifold carrying a family of metrics
//! `g(t)`, `t ∈ [T₁, T₂]`. The closed-form models all have the shape
//! `g(t) = s(t) · g_base` for a constant-curvature `g_base` (flat, unit round
//! sphere, hyperboloid of curvature −1), so geodesics, parallel transport and
//! the curvature tensor are those of `g_base` while lengths pick up `√s(t)`.
//!
//! Points of spheres and hyperbolic space are stored in ambient coordinates of
//! the unit sphere `S^m ⊂ ℝ^{m+1}` and of the hyperboloid `⟨x,x⟩_L = −1`,
//! independently of `t`. Tangent vectors use the same ambient coordinates.
//! Euclidean space and numeric charts use chart coordinates.

mod chart;

pub use chart::{MetricFn, NumericChart};

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, minkowski, norm};

/// Coordinate storage for points and tangent vectors.
pub type Coords = SmallVec<[f64; 4]>;

/// Drift vector field `Z(t, x)`, returned in the model's representation.
/// Embedded models project the result onto the tangent space.
pub type DriftFn = Arc<dyn Fn(f64, &[f64]) -> Coords + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Coords,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Self {
            coords: Coords::from_slice(coords),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        max_abs_diff(&self.coords, &other.coords)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Coords,
}

impl TangentVector {
    pub fn new(base: Point, components: &[f64]) -> Self {
        Self {
            base,
            components: Coords::from_slice(components),
        }
    }

    pub fn zero(base: &Point) -> Self {
        let n = base.len();
        Self {
            base: base.clone(),
            components: SmallVec::from_elem(0.0, n),
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            base: self.base.clone(),
            components: self.components.iter().map(|c| c * f).collect(),
        }
    }

    /// `self + f · other`; both vectors are taken at `self.base`.
    pub fn add_scaled(&self, f: f64, other: &TangentVector) -> Self {
        Self {
            base: self.base.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + f * b)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
            && self.base.coords.iter().all(|c| c.is_finite())
    }
}

/// A `g(time)`-orthonormal frame at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub base: Point,
    pub time: f64,
    pub vectors: Vec<TangentVector>,
}

impl Frame {
    /// `Σ coeffs[i] · vectors[i]`.
    pub fn apply(&self, coeffs: &[f64]) -> TangentVector {
        let n = self.base.len();
        let mut out: Coords = SmallVec::from_elem(0.0, n);
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            for (o, x) in out.iter_mut().zip(&v.components) {
                *o += c * x;
            }
        }
        TangentVector {
            base: self.base.clone(),
            components: out,
        }
    }
}

/// A unit-speed `g(time)`-geodesic `u ↦ γ(u)`, `u ∈ [0, length]`.
///
/// Evaluate it with [`ManifoldModel::geodesic_point`] and
/// [`ManifoldModel::geodesic_velocity`].
#[derive(Clone, Debug, PartialEq)]
pub struct Geodesic {
    pub time: f64,
    pub start: Point,
    pub end: Point,
    pub length: f64,
    /// Unit `g(time)`-norm.
    pub initial_velocity: TangentVector,
}

/// The kinds of model manifold.
#[derive(Clone, Debug)]
pub enum ModelKind {
    Euclidean,
    /// Round sphere with `g(t) = c(t) · g_unit`; `c(t) = c₀ + (m−1)(t−T₁)` when
    /// `flow` is set (a backward Ricci flow), `c ≡ c₀` otherwise.
    RoundSphere { c0: f64, flow: bool },
    /// Hyperbolic space of sectional curvature −1 (hyperboloid model).
    Hyperbolic,
    /// `g(t) = e^{−k(t−T₁)} g_base(t)`.
    Scaled { base: Box<ModelKind>, k: f64 },
    NumericChart(NumericChart),
}

#[derive(Clone, Debug)]
enum Base {
    Flat,
    Sphere { c0: f64, flow: bool },
    Hyperboloid,
    Chart(NumericChart),
}

impl ModelKind {
    fn resolve(&self) -> (Base, f64) {
        match self {
            ModelKind::Euclidean => (Base::Flat, 0.0),
            ModelKind::RoundSphere { c0, flow } => (
                Base::Sphere {
                    c0: *c0,
                    flow: *flow,
                },
                0.0,
            ),
            ModelKind::Hyperbolic => (Base::Hyperboloid, 0.0),
            ModelKind::Scaled { base, k } => {
                let (b, d) = base.resolve();
                (b, d + k)
            }
            ModelKind::NumericChart(c) => (Base::Chart(c.clone()), 0.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Euclidean => "euclidean",
            ModelKind::RoundSphere { flow: false, .. } => "sphere",
            ModelKind::RoundSphere { flow: true, .. } => "flow-sphere",
            ModelKind::Hyperbolic => "hyperbolic",
            ModelKind::Scaled { .. } => "scaled",
            ModelKind::NumericChart(_) => "numeric-chart",
        }
    }
}

/// A manifold with a time-dependent metric on `[t1, t2]`.
#[derive(Clone)]
pub struct ManifoldModel {
    dim: usize,
    t1: f64,
    t2: f64,
    kind: ModelKind,
    base: Base,
    decay: f64,
    drift: Option<DriftFn>,
}

impl fmt::Debug for ManifoldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("dim", &self.dim)
            .field("window", &(self.t1, self.t2))
            .field("kind", &self.kind)
            .field("drift", &self.drift.is_some())
            .finish()
    }
}

const TIME_SLACK: f64 = 1e-9;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| libm::fabs(x - y))
        .fold(0.0, f64::max)
}

fn all_finite(c: &[f64]) -> bool {
    c.iter().all(|x| x.is_finite())
}

impl ManifoldModel {
    pub fn new(dim: usize, t1: f64, t2: f64, kind: ModelKind) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
            return Err(invalid(format!("time window [{t1}, {t2}] is empty")));
        }
        let (base, decay) = kind.resolve();
        match &base {
            Base::Sphere { c0, .. } if !(*c0 > 0.0) => {
                return Err(invalid("sphere c0 must be positive"))
            }
            Base::Chart(c) if c.dim() != dim => {
                return Err(invalid("chart dimension does not match model dimension"))
            }
            _ => {}
        }
        if !decay.is_finite() {
            return Err(invalid("scaling exponent must be finite"));
        }
        Ok(Self {
            dim,
            t1,
            t2,
            kind,
            base,
            decay,
            drift: None,
        })
    }

    pub fn euclidean(dim: usize, t1: f64, t2: f64) -> Result<Self> {
        Self::new(dim, t1, t2, ModelKind::Euclidean)
    }

    pub fn round_sphere(dim: usize, c0: f64, flow: bool, t1: f64, t2: f64) -> Result<Self> {
        Self::new(dim, t1, t2, ModelKind::RoundSphere { c0, flow })
    }

    pub fn hyperbolic(dim: usize, t1: f64, t2: f64) -> Result<Self> {
        Self::new(dim, t1, t2, ModelKind::Hyperbolic)
    }

    pub fn numeric_chart(chart: NumericChart, t1: f64, t2: f64) -> Result<Self> {
        Self::new(chart.dim(), t1, t2, ModelKind::NumericChart(chart))
    }

    /// `g(t) = e^{−k(t−T₁)} g_base(t)`; keeps the base's window and drift.
    pub fn scaled(base: &ManifoldModel, k: f64) -> Result<Self> {
        let mut out = Self::new(
            base.dim,
            base.t1,
            base.t2,
            ModelKind::Scaled {
                base: Box::new(base.kind.clone()),
                k,
            },
        )?;
        out.drift = base.drift.clone();
        Ok(out)
    }

    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn has_drift(&self) -> bool {
        self.drift.is_some()
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self.base, Base::Chart(_))
    }

    /// Length of the coordinate vectors used for points and tangent vectors.
    pub fn ambient_dim(&self) -> usize {
        match self.base {
            Base::Sphere { .. } | Base::Hyperboloid => self.dim + 1,
            Base::Flat | Base::Chart(_) => self.dim,
        }
    }

    /// Canonical reference point: the chart origin, the north pole
    /// `(0, …, 0, 1)` of the sphere, or `(1, 0, …, 0)` on the hyperboloid.
    pub fn origin(&self) -> Point {
        let n = self.ambient_dim();
        let mut c: Coords = SmallVec::from_elem(0.0, n);
        match self.base {
            Base::Sphere { .. } => c[n - 1] = 1.0,
            Base::Hyperboloid => c[0] = 1.0,
            _ => {}
        }
        Point { coords: c }
    }

    fn base_curvature(&self) -> f64 {
        match self.base {
            Base::Sphere { .. } => 1.0,
            Base::Hyperboloid => -1.0,
            _ => 0.0,
        }
    }

    fn sphere_c(&self, t: f64) -> f64 {
        match self.base {
            Base::Sphere { c0, flow: true } => c0 + (self.dim as f64 - 1.0) * (t - self.t1),
            Base::Sphere { c0, flow: false } => c0,
            _ => 1.0,
        }
    }

    /// Spatially constant conformal factor: `g(t) = scale(t) · g_base`.
    /// For numeric charts this is the factor applied on top of the chart metric.
    pub fn scale(&self, t: f64) -> f64 {
        self.sphere_c(t) * libm::exp(-self.decay * (t - self.t1))
    }

    /// `d/dt log scale(t)`.
    fn scale_log_rate(&self, t: f64) -> f64 {
        let sphere = match self.base {
            Base::Sphere { flow: true, .. } => (self.dim as f64 - 1.0) / self.sphere_c(t),
            _ => 0.0,
        };
        sphere - self.decay
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < self.t1 - TIME_SLACK || t > self.t2 + TIME_SLACK {
            return Err(invalid(format!(
                "time {t} outside [{}, {}]",
                self.t1, self.t2
            )));
        }
        Ok(())
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return Err(invalid(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        if !all_finite(&x.coords) {
            return Err(invalid("point has non-finite coordinates"));
        }
        Ok(())
    }

    fn check_vector(&self, x: &Point, v: &TangentVector) -> Result<()> {
        self.check_point(x)?;
        if v.components.len() != self.ambient_dim() {
            return Err(invalid("tangent vector has the wrong length"));
        }
        if !all_finite(&v.components) {
            return Err(invalid("tangent vector has non-finite components"));
        }
        if v.base.max_abs_diff(x) > 1e-9 {
            return Err(invalid("tangent vector is not based at the given point"));
        }
        Ok(())
    }

    /// Distance of `x` from the embedding constraint (0 for chart models).
    /// On the hyperboloid it is relative to `x₀²`, the scale of the
    /// rounding error far from the origin.
    pub fn constraint_residual(&self, x: &Point) -> f64 {
        match self.base {
            Base::Sphere { .. } => libm::fabs(norm(&x.coords) - 1.0),
            Base::Hyperboloid => {
                libm::fabs(minkowski(&x.coords, &x.coords) + 1.0) / (x.coords[0] * x.coords[0]).max(1.0)
            }
            _ => 0.0,
        }
    }

    /// Inner product of `v` with the constraint gradient at its base.
    pub fn tangency_residual(&self, v: &TangentVector) -> f64 {
        match self.base {
            Base::Sphere { .. } => libm::fabs(dot(&v.base.coords, &v.components)),
            Base::Hyperboloid => libm::fabs(minkowski(&v.base.coords, &v.components)),
            _ => 0.0,
        }
    }

    /// Pulls ambient coordinates back onto the manifold.
    pub fn project_point(&self, coords: &[f64]) -> Point {
        let mut c = Coords::from_slice(coords);
        match self.base {
            Base::Sphere { .. } => {
                let n = norm(&c);
                c.iter_mut().for_each(|x| *x /= n);
            }
            Base::Hyperboloid => {
                let s: f64 = c[1..].iter().map(|x| x * x).sum();
                c[0] = libm::sqrt(1.0 + s);
            }
            _ => {}
        }
        Point { coords: c }
    }

    /// Orthogonal projection of ambient components onto `T_x M`.
    pub fn project_tangent(&self, x: &Point, comps: &[f64]) -> TangentVector {
        let mut c = Coords::from_slice(comps);
        match self.base {
            Base::Sphere { .. } => {
                let a = dot(&x.coords, &c);
                c.iter_mut().zip(&x.coords).for_each(|(v, p)| *v -= a * p);
            }
            Base::Hyperboloid => {
                let a = minkowski(&x.coords, &c);
                c.iter_mut().zip(&x.coords).for_each(|(v, p)| *v += a * p);
            }
            _ => {}
        }
        TangentVector {
            base: x.clone(),
            components: c,
        }
    }

    /// Base (time-independent, unscaled) inner product, chart metric at `t`.
    fn base_inner(&self, t: f64, x: &Point, u: &[f64], v: &[f64]) -> f64 {
        match &self.base {
            Base::Flat | Base::Sphere { .. } => dot(u, v),
            Base::Hyperboloid => minkowski(u, v),
            Base::Chart(c) => c.inner(t, &x.coords, u, v),
        }
    }

    /// `g(t)_x(u, v)`.
    pub fn inner(&self, t: f64, u: &TangentVector, v: &TangentVector) -> f64 {
        self.scale(t) * self.base_inner(t, &u.base, &u.components, &v.components)
    }

    pub fn norm(&self, t: f64, v: &TangentVector) -> f64 {
        libm::sqrt(self.inner(t, v, v).max(0.0))
    }

    /// Gram matrix of `g(t)` at `x` (`m × m`, row-major) in the chart basis for
    /// chart models and in the `g_base`-orthonormal basis of [`Self::frame_at`]
    /// for closed-form models.
    pub fn metric(&self, t: f64, x: &Point) -> Vec<f64> {
        let m = self.dim;
        match &self.base {
            Base::Chart(c) => {
                let f = self.scale(t);
                c.metric(t, &x.coords).into_iter().map(|g| g * f).collect()
            }
            _ => {
                let s = self.scale(t);
                let mut g = vec![0.0; m * m];
                for i in 0..m {
                    g[i * m + i] = s;
                }
                g
            }
        }
    }

    /// `∂_t g(t)_x(u, v)`.
    pub fn metric_time_derivative(&self, t: f64, u: &TangentVector, v: &TangentVector) -> f64 {
        let own = self.scale_log_rate(t) * self.inner(t, u, v);
        match &self.base {
            Base::Chart(c) => {
                let (lo, hi) = fd_time_pair(t, self.t1, self.t2, 1e-5);
                let x = &u.base.coords;
                let d = (c.inner(hi, x, &u.components, &v.components)
                    - c.inner(lo, x, &u.components, &v.components))
                    / (hi - lo);
                own + self.scale(t) * d
            }
            _ => own,
        }
    }

    /// `Ric_{g(t)}(u, v)` at the common base point.
    pub fn ricci(&self, t: f64, u: &TangentVector, v: &TangentVector) -> f64 {
        match &self.base {
            Base::Chart(c) => {
                let ric = c.ricci(t, &u.base.coords);
                crate::linalg::quad_form(&ric, &u.components, &v.components)
            }
            _ => {
                (self.dim as f64 - 1.0)
                    * self.base_curvature()
                    * self.base_inner(t, &u.base, &u.components, &v.components)
            }
        }
    }

    /// `Ric_{g(t)}(v, v)`.
    pub fn ricci_quadratic(&self, t: f64, v: &TangentVector) -> f64 {
        self.ricci(t, v, v)
    }

    /// `R(u, v) w = ∇_u∇_v w − ∇_v∇_u w − ∇_{[u,v]} w` for `g(t)`.
    pub fn curvature_apply(
        &self,
        t: f64,
        u: &TangentVector,
        v: &TangentVector,
        w: &TangentVector,
    ) -> TangentVector {
        match &self.base {
            Base::Chart(c) => {
                let comps = c.curvature_apply(t, &u.base.coords, &u.components, &v.components, &w.components);
                TangentVector {
                    base: u.base.clone(),
                    components: Coords::from_vec(comps),
                }
            }
            _ => {
                let kb = self.base_curvature();
                let vw = self.base_inner(t, &u.base, &v.components, &w.components);
                let uw = self.base_inner(t, &u.base, &u.components, &w.components);
                TangentVector {
                    base: u.base.clone(),
                    components: u
                        .components
                        .iter()
                        .zip(&v.components)
                        .map(|(a, b)| kb * (vw * a - uw * b))
                        .collect(),
                }
            }
        }
    }

    /// `g(t)(R(v, e) e, v)`.
    pub fn curvature_form(&self, t: f64, v: &TangentVector, e: &TangentVector) -> f64 {
        let r = self.curvature_apply(t, v, e, e);
        self.inner(t, &r, v)
    }

    /// `exp^{(t)}_x(v)`.
    pub fn exp(&self, t: f64, x: &Point, v: &TangentVector) -> Result<Point> {
        self.check_time(t)?;
        self.check_vector(x, v)?;
        Ok(self.exp_unchecked(t, x, &v.components))
    }

    fn exp_unchecked(&self, t: f64, x: &Point, v: &[f64]) -> Point {
        match &self.base {
            Base::Flat => Point {
                coords: x.coords.iter().zip(v).map(|(a, b)| a + b).collect(),
            },
            Base::Sphere { .. } => {
                let th = norm(v);
                if th < 1e-300 {
                    return x.clone();
                }
                let (s, c) = libm::sincos(th);
                let y: Coords = x
                    .coords
                    .iter()
                    .zip(v)
                    .map(|(p, w)| c * p + s * w / th)
                    .collect();
                self.project_point(&y)
            }
            Base::Hyperboloid => {
                let th = libm::sqrt(minkowski(v, v).max(0.0));
                if th < 1e-300 {
                    return x.clone();
                }
                let (s, c) = (libm::sinh(th), libm::cosh(th));
                let y: Coords = x
                    .coords
                    .iter()
                    .zip(v)
                    .map(|(p, w)| c * p + s * w / th)
                    .collect();
                self.project_point(&y)
            }
            Base::Chart(ch) => Point {
                coords: Coords::from_vec(ch.exp(t, &x.coords, v)),
            },
        }
    }

    /// Unit `g_base` direction and `g_base` length of the minimal geodesic.
    fn base_log(&self, x: &Point, y: &Point) -> Result<(Coords, f64)> {
        if x.max_abs_diff(y) < 1e-12 {
            return Err(Error::Degenerate("geodesic endpoints coincide".into()));
        }
        match self.base {
            Base::Flat => {
                let d: Coords = y.coords.iter().zip(&x.coords).map(|(a, b)| a - b).collect();
                let l = norm(&d);
                Ok((d.iter().map(|c| c / l).collect(), l))
            }
            Base::Sphere { .. } => {
                let cosang = dot(&x.coords, &y.coords);
                let w: Coords = y
                    .coords
                    .iter()
                    .zip(&x.coords)
                    .map(|(a, b)| a - cosang * b)
                    .collect();
                let sinang = norm(&w);
                let angle = libm::atan2(sinang, cosang);
                if sinang < ANTIPODAL_TOL && cosang < 0.0 {
                    return Ok((self.tie_break_direction(x), angle));
                }
                Ok((w.iter().map(|c| c / sinang).collect(), angle))
            }
            Base::Hyperboloid => {
                let ch = -minkowski(&x.coords, &y.coords);
                let w: Coords = y
                    .coords
                    .iter()
                    .zip(&x.coords)
                    .map(|(a, b)| a - ch * b)
                    .collect();
                let sh = libm::sqrt(minkowski(&w, &w).max(0.0));
                let angle = libm::asinh(sh);
                Ok((w.iter().map(|c| c / sh).collect(), angle))
            }
            Base::Chart(_) => Err(Error::Unsupported {
                model: "numeric-chart",
                op: "minimal geodesic",
            }),
        }
    }

    /// First ambient axis not parallel to `x`, projected onto `T_x S^m`.
    fn tie_break_direction(&self, x: &Point) -> Coords {
        for i in 0..x.len() {
            let mut e: Coords = SmallVec::from_elem(0.0, x.len());
            e[i] = 1.0;
            let p = self.project_tangent(x, &e).components;
            let n = norm(&p);
            if n > 1e-6 {
                return p.iter().map(|c| c / n).collect();
            }
        }
        unreachable!("some axis is transverse to x")
    }

    /// Unit-speed minimal `g(t)`-geodesic from `x` to `y`.
    ///
    /// Antipodal sphere pairs use the great circle through the first ambient
    /// axis not parallel to `x`; for such pairs `T_x = T_y`, so the reversed
    /// geodesic from `y` traces the same circle.
    pub fn minimal_geodesic(&self, t: f64, x: &Point, y: &Point) -> Result<Geodesic> {
        self.check_time(t)?;
        self.check_point(x)?;
        self.check_point(y)?;
        let (dir, base_len) = self.base_log(x, y)?;
        let rs = libm::sqrt(self.scale(t));
        Ok(Geodesic {
            time: t,
            start: x.clone(),
            end: y.clone(),
            length: base_len * rs,
            initial_velocity: TangentVector {
                base: x.clone(),
                components: dir.iter().map(|c| c / rs).collect(),
            },
        })
    }

    /// Geodesic `u ↦ exp^{(t)}_x(u v/|v|)` of length `|v|_{g(t)}`.
    pub fn geodesic_from(&self, t: f64, x: &Point, v: &TangentVector) -> Result<Geodesic> {
        self.check_time(t)?;
        self.check_vector(x, v)?;
        let len = self.norm(t, v);
        if !(len > 1e-14) {
            return Err(Error::Degenerate("zero initial velocity".into()));
        }
        let end = self.exp_unchecked(t, x, &v.components);
        Ok(Geodesic {
            time: t,
            start: x.clone(),
            end,
            length: len,
            initial_velocity: v.scaled(1.0 / len),
        })
    }

    /// `γ(u)`.
    pub fn geodesic_point(&self, geo: &Geodesic, u: f64) -> Point {
        let v: Coords = geo.initial_velocity.components.iter().map(|c| c * u).collect();
        self.exp_unchecked(geo.time, &geo.start, &v)
    }

    /// `γ̇(u)`, unit `g(time)`-norm.
    pub fn geodesic_velocity(&self, geo: &Geodesic, u: f64) -> TangentVector {
        let v0 = &geo.initial_velocity.components;
        let x = &geo.start.coords;
        let (point, comps): (Point, Coords) = match &self.base {
            Base::Flat => (self.geodesic_point(geo, u), v0.clone()),
            Base::Sphere { .. } => {
                let w = norm(v0);
                let (s, c) = libm::sincos(u * w);
                (
                    self.geodesic_point(geo, u),
                    x.iter().zip(v0).map(|(p, v)| -w * s * p + c * v).collect(),
                )
            }
            Base::Hyperboloid => {
                let w = libm::sqrt(minkowski(v0, v0).max(0.0));
                let (s, c) = (libm::sinh(u * w), libm::cosh(u * w));
                (
                    self.geodesic_point(geo, u),
                    x.iter().zip(v0).map(|(p, v)| w * s * p + c * v).collect(),
                )
            }
            Base::Chart(ch) => {
                let v: Vec<f64> = v0.iter().map(|c| c * u).collect();
                let (p, vel) = ch.exp_with_velocity(geo.time, x, &v);
                let vel = if u > 0.0 {
                    vel.iter().map(|c| c / u).collect()
                } else {
                    v0.clone()
                };
                (
                    Point {
                        coords: Coords::from_vec(p),
                    },
                    vel,
                )
            }
        };
        TangentVector {
            base: point,
            components: comps,
        }
    }

    /// Points and unit velocities at `u_i = i·length/n`, `i = 0..=n`.
    pub fn geodesic_trace(&self, geo: &Geodesic, n: usize) -> Vec<(Point, TangentVector)> {
        let n = n.max(1);
        match &self.base {
            Base::Chart(ch) => {
                let v: Vec<f64> = geo
                    .initial_velocity
                    .components
                    .iter()
                    .map(|c| c * geo.length)
                    .collect();
                ch.trace(geo.time, &geo.start.coords, &v, n, &[])
                    .into_iter()
                    .map(|s| {
                        let p = Point {
                            coords: Coords::from_vec(s.point),
                        };
                        let vel = TangentVector {
                            base: p.clone(),
                            components: s.velocity.iter().map(|c| c / geo.length).collect(),
                        };
                        (p, vel)
                    })
                    .collect()
            }
            _ => (0..=n)
                .map(|i| {
                    let u = geo.length * i as f64 / n as f64;
                    let vel = self.geodesic_velocity(geo, u);
                    (vel.base.clone(), vel)
                })
                .collect(),
        }
    }

    /// Parallel transport along the whole geodesic.
    pub fn parallel_transport(&self, geo: &Geodesic, v: &TangentVector) -> Result<TangentVector> {
        self.transport_along(geo, geo.length, v)
    }

    /// Parallel transport of `v ∈ T_{γ(0)}` to `γ(u)`.
    pub fn transport_along(&self, geo: &Geodesic, u: f64, v: &TangentVector) -> Result<TangentVector> {
        self.check_vector(&geo.start, v)?;
        Ok(self.transport_unchecked(geo, u, v))
    }

    fn transport_unchecked(&self, geo: &Geodesic, u: f64, v: &TangentVector) -> TangentVector {
        let v0 = &geo.initial_velocity.components;
        let x = &geo.start.coords;
        match &self.base {
            Base::Flat => TangentVector {
                base: self.geodesic_point(geo, u),
                components: v.components.clone(),
            },
            Base::Sphere { .. } => {
                let w = norm(v0);
                let e: Coords = v0.iter().map(|c| c / w).collect();
                let a = dot(&v.components, &e);
                let (s, c) = libm::sincos(u * w);
                let comps: Coords = v
                    .components
                    .iter()
                    .zip(e.iter().zip(x))
                    .map(|(vi, (ei, xi))| vi + a * ((c - 1.0) * ei - s * xi))
                    .collect();
                let base = self.geodesic_point(geo, u);
                self.project_tangent(&base, &comps)
            }
            Base::Hyperboloid => {
                let w = libm::sqrt(minkowski(v0, v0).max(0.0));
                let e: Coords = v0.iter().map(|c| c / w).collect();
                let a = minkowski(&v.components, &e);
                let (s, c) = (libm::sinh(u * w), libm::cosh(u * w));
                let comps: Coords = v
                    .components
                    .iter()
                    .zip(e.iter().zip(x))
                    .map(|(vi, (ei, xi))| vi + a * ((c - 1.0) * ei + s * xi))
                    .collect();
                let base = self.geodesic_point(geo, u);
                self.project_tangent(&base, &comps)
            }
            Base::Chart(ch) => {
                let vel: Vec<f64> = v0.iter().map(|c| c * u).collect();
                let samples = ch.trace(geo.time, x, &vel, 1, core::slice::from_ref(&v.components.to_vec()));
                let last = samples.into_iter().last().expect("trace has samples");
                TangentVector {
                    base: Point {
                        coords: Coords::from_vec(last.point),
                    },
                    components: Coords::from_vec(last.transported.into_iter().next().unwrap_or_default()),
                }
            }
        }
    }

    /// Parallel frame along the geodesic: `out[i][j]` is the transport of
    /// `frame[j]` to `γ(i·length/n)`.
    pub fn parallel_frame_along(
        &self,
        geo: &Geodesic,
        frame: &[TangentVector],
        n: usize,
    ) -> Vec<Vec<TangentVector>> {
        let n = n.max(1);
        match &self.base {
            Base::Chart(ch) => {
                let vel: Vec<f64> = geo
                    .initial_velocity
                    .components
                    .iter()
                    .map(|c| c * geo.length)
                    .collect();
                let vs: Vec<Vec<f64>> = frame.iter().map(|f| f.components.to_vec()).collect();
                ch.trace(geo.time, &geo.start.coords, &vel, n, &vs)
                    .into_iter()
                    .map(|s| {
                        let p = Point {
                            coords: Coords::from_vec(s.point),
                        };
                        s.transported
                            .into_iter()
                            .map(|c| TangentVector {
                                base: p.clone(),
                                components: Coords::from_vec(c),
                            })
                            .collect()
                    })
                    .collect()
            }
            _ => (0..=n)
                .map(|i| {
                    let u = geo.length * i as f64 / n as f64;
                    frame
                        .iter()
                        .map(|f| self.transport_unchecked(geo, u, f))
                        .collect()
                })
                .collect(),
        }
    }

    /// `d_{g(t)}(x, y)`.
    pub fn distance(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        self.check_time(t)?;
        self.check_point(x)?;
        self.check_point(y)?;
        if let Base::Chart(_) = self.base {
            return Err(Error::Unsupported {
                model: "numeric-chart",
                op: "distance",
            });
        }
        if x.max_abs_diff(y) < 1e-15 {
            return Ok(0.0);
        }
        let base = match self.base {
            Base::Flat => {
                let d: Coords = y.coords.iter().zip(&x.coords).map(|(a, b)| a - b).collect();
                norm(&d)
            }
            Base::Sphere { .. } => {
                let c = dot(&x.coords, &y.coords);
                let w: Coords = y.coords.iter().zip(&x.coords).map(|(a, b)| a - c * b).collect();
                libm::atan2(norm(&w), c)
            }
            Base::Hyperboloid => {
                let ch = -minkowski(&x.coords, &y.coords);
                let w: Coords = y.coords.iter().zip(&x.coords).map(|(a, b)| a - ch * b).collect();
                libm::asinh(libm::sqrt(minkowski(&w, &w).max(0.0)))
            }
            Base::Chart(_) => unreachable!(),
        };
        Ok(base * libm::sqrt(self.scale(t)))
    }

    /// Candidate basis of `T_x M` before orthonormalization.
    fn frame_candidates(&self, x: &Point) -> Vec<Coords> {
        let n = self.ambient_dim();
        let axis = |i: usize| {
            let mut e: Coords = SmallVec::from_elem(0.0, n);
            e[i] = 1.0;
            e
        };
        match self.base {
            Base::Flat | Base::Chart(_) => (0..n).map(axis).collect(),
            Base::Sphere { .. } | Base::Hyperboloid => {
                // The projected axes satisfy one linear relation with
                // coefficients x_i; dropping the axis with the largest |x_i|
                // leaves a well-conditioned basis.
                let mut skip = 0;
                for i in 1..n {
                    if libm::fabs(x.coords[i]) > libm::fabs(x.coords[skip]) {
                        skip = i;
                    }
                }
                (0..n)
                    .filter(|&i| i != skip)
                    .map(|i| self.project_tangent(x, &axis(i)).components)
                    .collect()
            }
        }
    }

    /// Deterministic `g(t)`-orthonormal frame at `x` (Gram–Schmidt, applied twice).
    pub fn frame_at(&self, t: f64, x: &Point) -> Frame {
        if let Base::Flat = self.base {
            // Gram–Schmidt leaves orthogonal axes unchanged; only the norm applies.
            let n = libm::sqrt(self.scale(t).max(0.0));
            let vectors = (0..self.dim)
                .map(|i| {
                    let mut c: Coords = SmallVec::from_elem(0.0, self.dim);
                    c[i] = 1.0 / n;
                    TangentVector {
                        base: x.clone(),
                        components: c,
                    }
                })
                .collect();
            return Frame {
                base: x.clone(),
                time: t,
                vectors,
            };
        }
        let mut vectors: Vec<TangentVector> = Vec::with_capacity(self.dim);
        for c in self.frame_candidates(x) {
            let mut w = TangentVector {
                base: x.clone(),
                components: c,
            };
            for _ in 0..2 {
                for f in &vectors {
                    let a = self.inner(t, &w, f);
                    w = w.add_scaled(-a, f);
                }
            }
            let n = self.norm(t, &w);
            if n > 1e-12 && vectors.len() < self.dim {
                vectors.push(w.scaled(1.0 / n));
            }
        }
        Frame {
            base: x.clone(),
            time: t,
            vectors,
        }
    }

    /// `Z(t, x)`, zero when the model has no drift.
    pub fn drift(&self, t: f64, x: &Point) -> TangentVector {
        match &self.drift {
            None => TangentVector::zero(x),
            Some(z) => {
                let raw = z(t, &x.coords);
                self.project_tangent(x, &raw)
            }
        }
    }

    /// `(∇Z(t))^♭(v, v) = g(t)(∇_v Z, v)`, by central differences of `Z`.
    pub fn drift_covariant_form(&self, t: f64, v: &TangentVector) -> f64 {
        let Some(z) = &self.drift else { return 0.0 };
        let x = &v.base;
        let nv = self.norm(t, v);
        if nv == 0.0 {
            return 0.0;
        }
        let eps = 1e-5 / nv;
        let grad: Coords = match &self.base {
            Base::Chart(ch) => {
                let plus: Vec<f64> = x.coords.iter().zip(&v.components).map(|(a, b)| a + eps * b).collect();
                let minus: Vec<f64> = x.coords.iter().zip(&v.components).map(|(a, b)| a - eps * b).collect();
                let zp = z(t, &plus);
                let zm = z(t, &minus);
                let z0 = z(t, &x.coords);
                let conn = ch.connection_apply(t, &x.coords, &v.components, &z0);
                zp.iter()
                    .zip(&zm)
                    .zip(&conn)
                    .map(|((a, b), c)| (a - b) / (2.0 * eps) + c)
                    .collect()
            }
            _ => {
                let vp: Coords = v.components.iter().map(|c| c * eps).collect();
                let vm: Coords = v.components.iter().map(|c| -c * eps).collect();
                let xp = self.exp_unchecked(t, x, &vp);
                let xm = self.exp_unchecked(t, x, &vm);
                let zp = z(t, &xp.coords);
                let zm = z(t, &xm.coords);
                let d: Coords = zp.iter().zip(&zm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
                self.project_tangent(x, &d).components
            }
        };
        let g = TangentVector {
            base: x.clone(),
            components: grad,
        };
        self.inner(t, &g, v)
    }

    /// `Ric(v,v) + k g(v,v) − ∂_t g(v,v) − 2(∇Z)^♭(v,v)`; nonnegative everywhere
    /// exactly when the curvature condition with constant `k` holds.
    pub fn curvature_condition_residual(&self, t: f64, v: &TangentVector, k: f64) -> f64 {
        self.ricci_quadratic(t, v) + k * self.inner(t, v, v)
            - self.metric_time_derivative(t, v, v)
            - 2.0 * self.drift_covariant_form(t, v)
    }

    /// Smallest `κ` with `e^{−2κ|t−s|} g(s) ≤ g(t) ≤ e^{2κ|t−s|} g(s)` on the
    /// sampled points, tested on frame directions and their pairwise sums and
    /// differences.
    pub fn estimate_kappa(&self, t: f64, s: f64, points: &[Point]) -> Result<f64> {
        self.check_time(t)?;
        self.check_time(s)?;
        if t == s {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for x in points {
            self.check_point(x)?;
            let frame = self.frame_at(s, x);
            let mut dirs = frame.vectors.clone();
            for i in 0..frame.vectors.len() {
                for j in i + 1..frame.vectors.len() {
                    dirs.push(frame.vectors[i].add_scaled(1.0, &frame.vectors[j]));
                    dirs.push(frame.vectors[i].add_scaled(-1.0, &frame.vectors[j]));
                }
            }
            for v in &dirs {
                let r = self.inner(t, v, v) / self.inner(s, v, v);
                worst = worst.max(libm::fabs(libm::log(r)));
            }
        }
        Ok(worst / (2.0 * libm::fabs(t - s)))
    }

    /// `exp_x(d · e_i)` with `e_i` the `i`-th vector of [`Self::frame_at`].
    pub fn offset_point(&self, t: f64, x: &Point, axis: usize, d: f64) -> Result<Point> {
        let frame = self.frame_at(t, x);
        let e = frame
            .vectors
            .get(axis)
            .ok_or_else(|| invalid("frame axis out of range"))?;
        self.exp(t, x, &e.scaled(d))
    }

    /// Largest `g(t)`-length below which geodesics from a point stay minimal.
    pub fn injectivity_radius(&self, t: f64) -> f64 {
        match self.base {
            Base::Sphere { .. } => core::f64::consts::PI * libm::sqrt(self.scale(t)),
            _ => f64::INFINITY,
        }
    }
}

/// Below this `sin` of the angle, a sphere pair with negative cosine is
/// treated as antipodal.
const ANTIPODAL_TOL: f64 = 1e-9;

fn fd_time_pair(t: f64, t1: f64, t2: f64, eps: f64) -> (f64, f64) {
    let lo = (t - eps).max(t1);
    let hi = (t + eps).min(t2);
    if hi > lo {
        (lo, hi)
    } else {
        (t - eps, t + eps)
    }
}
