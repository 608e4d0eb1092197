//! The geodesic random walk `X^α`.
//!
//! From `X_n` at time `t_n` the walk moves along
//! `exp^{(t_n)}_{X_n}(α ξ̃_{n+1} + α² Z(t_n, X_n))` with
//! `ξ̃ = √(m+2) Φ(X_n) ξ`, `ξ` uniform on the unit ball of `ℝ^m` and `Φ` the
//! frame field of [`ManifoldModel::frame_at`]. Between schedule times the
//! path follows the same geodesic at the fraction `(t − t_n)/α²`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::manifold::{Coords, Frame, ManifoldModel, Point, TangentVector};
use crate::rng::{ball_draws, Lane, NoiseStream, StreamKey};

/// Parameters of one walk.
#[derive(Clone, Debug)]
pub struct WalkConfig {
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub seed: u64,
    pub start: Point,
    pub use_drift: bool,
    /// Reference point `o` for exit times and radial comparison.
    pub reference: Option<Point>,
    pub exit_radius: Option<f64>,
}

impl WalkConfig {
    pub fn new(alpha: f64, t1: f64, t2: f64, seed: u64, start: Point) -> Self {
        Self {
            alpha,
            t1,
            t2,
            seed,
            start,
            use_drift: false,
            reference: None,
            exit_radius: None,
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.alpha, self.t1, self.t2)
    }

    /// The reference point, defaulting to the model origin.
    pub fn reference_point(&self, model: &ManifoldModel) -> Point {
        self.reference.clone().unwrap_or_else(|| model.origin())
    }

    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        self.schedule()?;
        let (a, b) = model.window();
        if self.t1 < a - 1e-12 || self.t2 > b + 1e-12 {
            return Err(invalid(format!(
                "walk window [{}, {}] exceeds the model window [{a}, {b}]",
                self.t1, self.t2
            )));
        }
        if self.start.len() != model.ambient_dim() {
            return Err(invalid("start point has the wrong number of coordinates"));
        }
        if model.constraint_residual(&self.start) > 1e-9 {
            return Err(invalid("start point is not on the manifold"));
        }
        if let Some(r) = self.exit_radius {
            if !(r > 1.0) {
                return Err(invalid("exit radius must exceed 1"));
            }
        }
        Ok(())
    }
}

/// `t_n = (T₁ + α² n) ∧ T₂`, `n = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub times: Vec<f64>,
}

impl Schedule {
    pub fn new(alpha: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("alpha = {alpha} must be positive")));
        }
        if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
            return Err(invalid(format!("time window [{t1}, {t2}] is empty")));
        }
        let a2 = alpha * alpha;
        if !(a2 < t2 - t1) {
            return Err(invalid(format!(
                "alpha^2 = {a2} must be below t2 - t1 = {}",
                t2 - t1
            )));
        }
        let n = libm::ceil((t2 - t1) / a2 - 1e-9) as usize;
        let times = (0..=n)
            .map(|i| if i == n { t2 } else { (t1 + a2 * i as f64).min(t2) })
            .collect();
        Ok(Self { alpha, t1, t2, times })
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `(t_{n+1} − t_n)/α²`; 1 except possibly for the last step.
    pub fn fraction(&self, n: usize) -> f64 {
        (self.times[n + 1] - self.times[n]) / (self.alpha * self.alpha)
    }

    /// The `n` with `t_n ≤ t < t_{n+1}`, clamped to `0..N`.
    pub fn step_index(&self, t: f64) -> usize {
        let a2 = self.alpha * self.alpha;
        let guess = libm::floor((t - self.t1) / a2).max(0.0) as usize;
        let mut n = guess.min(self.steps() - 1);
        while n > 0 && self.times[n] > t {
            n -= 1;
        }
        while n + 1 < self.steps() && self.times[n + 1] <= t {
            n += 1;
        }
        n
    }
}

/// One step's noise: `ξ` in the unit ball and `ξ̃ = √(m+2) Φ ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSample {
    pub xi: Coords,
    pub xi_tilde: TangentVector,
}

impl NoiseSample {
    pub fn from_frame(frame: &Frame, xi: &[f64]) -> Self {
        let s = libm::sqrt(xi.len() as f64 + 2.0);
        Self {
            xi: Coords::from_slice(xi),
            xi_tilde: frame.apply(xi).scaled(s),
        }
    }
}

/// Skeleton of a walk on its schedule.
#[derive(Clone, Debug)]
pub struct WalkPath {
    pub schedule: Schedule,
    /// `X(t_n)`, `n = 0..=N`.
    pub skeleton: Vec<Point>,
    /// `α ξ̃_{n+1} + α² Z(t_n, X_n)` at `X_n` (before the step fraction).
    pub step_vectors: Vec<TangentVector>,
    /// `ξ_{n+1}`.
    pub noise_record: Vec<Coords>,
}

/// Uniform sample of the closed unit ball in `ℝ^m`: a Gaussian direction with
/// radius `U^{1/m}`. Consumes exactly [`ball_draws`]`(m)` uniforms.
pub fn sample_unit_ball(m: usize, rng: &mut NoiseStream) -> Coords {
    let mut g: Coords = Coords::with_capacity(m + 1);
    while g.len() < m {
        let (a, b) = rng.normal_pair();
        g.push(a);
        g.push(b);
    }
    g.truncate(m);
    let u = rng.uniform();
    let n = libm::sqrt(g.iter().map(|x| x * x).sum::<f64>());
    if !(n > 0.0) {
        return Coords::from_elem(0.0, m);
    }
    let r = libm::pow(u, 1.0 / m as f64);
    g.iter_mut().for_each(|x| *x *= r / n);
    g
}

/// The step vector `α ξ̃ + α² Z(t, x)` at `x`.
pub fn step_vector(model: &ManifoldModel, t: f64, x: &Point, xi_tilde: &TangentVector, alpha: f64, use_drift: bool) -> TangentVector {
    let v = xi_tilde.scaled(alpha);
    if use_drift && model.has_drift() {
        v.add_scaled(alpha * alpha, &model.drift(t, x))
    } else {
        v
    }
}

/// A full step from `x` at time `t` with frame `Φ(x) = model.frame_at(t, x)`.
pub fn step(
    model: &ManifoldModel,
    t: f64,
    x: &Point,
    xi: &[f64],
    alpha: f64,
    use_drift: bool,
) -> Result<(Point, NoiseSample)> {
    let frame = model.frame_at(t, x);
    step_with_frame(model, t, x, &frame, xi, alpha, use_drift, 1.0).map(|(p, n, _)| (p, n))
}

/// A step using the supplied frame at `x`, scaled by `fraction`.
#[allow(clippy::too_many_arguments)]
pub fn step_with_frame(
    model: &ManifoldModel,
    t: f64,
    x: &Point,
    frame: &Frame,
    xi: &[f64],
    alpha: f64,
    use_drift: bool,
    fraction: f64,
) -> Result<(Point, NoiseSample, TangentVector)> {
    if xi.len() != model.dim() {
        return Err(invalid("noise has the wrong dimension"));
    }
    let noise = NoiseSample::from_frame(frame, xi);
    let v = step_vector(model, t, x, &noise.xi_tilde, alpha, use_drift);
    let y = model.exp(t, x, &v.scaled(fraction))?;
    Ok((y, noise, v))
}

/// Stream of ball noise for one path, one block of draws per step.
pub fn walk_stream(seed: u64, path: u64, m: usize) -> NoiseStream {
    NoiseStream::new(StreamKey::new(seed, path, Lane::Walk), ball_draws(m))
}

/// `ξ_{n+1}` for step `n` of the given stream.
pub fn noise_at(rng: &mut NoiseStream, n: usize, m: usize) -> Coords {
    rng.seek_step(n as u64);
    sample_unit_ball(m, rng)
}

pub fn run_walk(model: &ManifoldModel, cfg: &WalkConfig, path: u64) -> Result<WalkPath> {
    run_walk_with_frames(model, cfg, path, |t, x| model.frame_at(t, x))
}

/// [`run_walk`] with a caller-supplied frame field.
pub fn run_walk_with_frames(
    model: &ManifoldModel,
    cfg: &WalkConfig,
    path: u64,
    frames: impl Fn(f64, &Point) -> Frame,
) -> Result<WalkPath> {
    cfg.validate(model)?;
    let schedule = cfg.schedule()?;
    let m = model.dim();
    let n = schedule.steps();
    let mut rng = walk_stream(cfg.seed, path, m);
    let mut skeleton = Vec::with_capacity(n + 1);
    let mut step_vectors = Vec::with_capacity(n);
    let mut noise_record = Vec::with_capacity(n);
    let mut x = cfg.start.clone();
    skeleton.push(x.clone());
    for i in 0..n {
        let t = schedule.times[i];
        let xi = noise_at(&mut rng, i, m);
        let frame = frames(t, &x);
        let (y, _, v) = step_with_frame(model, t, &x, &frame, &xi, cfg.alpha, cfg.use_drift, schedule.fraction(i))
            .map_err(|e| Error::Numerical {
                step: i,
                reason: format!("{e}"),
            })?;
        if !y.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Numerical {
                step: i,
                reason: "non-finite position".into(),
            });
        }
        step_vectors.push(v);
        noise_record.push(xi);
        x = y;
        skeleton.push(x.clone());
    }
    Ok(WalkPath {
        schedule,
        skeleton,
        step_vectors,
        noise_record,
    })
}

/// `X^α(t)` on the geodesic of the step containing `t`.
pub fn interpolate(model: &ManifoldModel, path: &WalkPath, t: f64) -> Result<Point> {
    let s = &path.schedule;
    if !(t >= s.t1 - 1e-12 && t <= s.t2 + 1e-12) {
        return Err(invalid(format!("time {t} outside [{}, {}]", s.t1, s.t2)));
    }
    let n = s.step_index(t);
    let frac = ((t - s.times[n]) / (s.alpha * s.alpha)).max(0.0);
    let v = path.step_vectors[n].scaled(frac);
    model.exp(s.times[n], &path.skeleton[n], &v)
}

/// First schedule time with `d_{g(t_n)}(o, X(t_n)) > R − 1`, `None` if never.
pub fn exit_time(path: &WalkPath, model: &ManifoldModel, o: &Point, radius: f64) -> Result<Option<f64>> {
    if !(radius > 1.0) {
        return Err(invalid("exit radius must exceed 1"));
    }
    for (t, x) in path.schedule.times.iter().zip(&path.skeleton) {
        if model.distance(*t, o, x)? > radius - 1.0 {
            return Ok(Some(*t));
        }
    }
    Ok(None)
}

/// A walk observed at the jump times of an independent Poisson clock of rate
/// `α^{−2}`: `X^α((T₁ + α² Π(t − T₁)) ∧ t_N)`.
#[derive(Clone, Debug)]
pub struct SubordinatedPath {
    pub walk: WalkPath,
    /// Jump times of the clock in `(T₁, T₂]`.
    pub jump_times: Vec<f64>,
}

impl SubordinatedPath {
    /// `Π(t − T₁)`, uncapped.
    pub fn jumps_by(&self, t: f64) -> usize {
        self.jump_times.partition_point(|s| *s <= t)
    }

    /// Skeleton index `Π(t − T₁) ∧ N`.
    pub fn index_at(&self, t: f64) -> usize {
        self.jumps_by(t).min(self.walk.schedule.steps())
    }

    pub fn point_at(&self, t: f64) -> &Point {
        &self.walk.skeleton[self.index_at(t)]
    }
}

pub fn subordinated_walk(model: &ManifoldModel, cfg: &WalkConfig, path: u64) -> Result<SubordinatedPath> {
    let walk = run_walk(model, cfg, path)?;
    let mut clock = NoiseStream::sequential(StreamKey::new(cfg.seed, path, Lane::Poisson));
    let rate = 1.0 / (cfg.alpha * cfg.alpha);
    let mut jump_times = Vec::new();
    let mut s = cfg.t1;
    loop {
        s += clock.exponential(rate);
        if s > cfg.t2 {
            break;
        }
        jump_times.push(s);
    }
    Ok(SubordinatedPath { walk, jump_times })
}

#[cfg(test)]
mod tests;
