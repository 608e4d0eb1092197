//! One-dimensional comparison processes.
//!
//! The Ornstein–Uhlenbeck process `dU = −(k/2) U dt + 2 dB` controls the
//! distance of a reflection-coupled pair; its survival probability is
//! `χ(a / (2√β(T − T₁)))`. The radial process
//! `dρ = dB + (φ(ρ) + ψ(ρ)) dt` controls the distance of a walk from a
//! reference point, and the Feller test decides whether it can explode.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::exec::PathExecutor;
use crate::manifold::{ManifoldModel, Point};
use crate::rng::{Lane, NoiseStream, StreamKey};
use crate::stats::{proportion, McEstimate};
use crate::walk::{NoiseSample, Schedule, WalkPath};

/// `χ(a) = 2Φ(a) − 1`, the mass of `[−a, a]` under the standard normal law.
/// Negative arguments are treated as 0.
pub fn chi(a: f64) -> f64 {
    if !(a > 0.0) {
        return 0.0;
    }
    libm::erf(a * core::f64::consts::FRAC_1_SQRT_2)
}

/// `β(t) = (e^{kt} − 1)/k`, and `t` at `k = 0`.
pub fn beta(t: f64, k: f64) -> f64 {
    let kt = k * t;
    if k.abs() < 1e-8 {
        t * (1.0 + kt / 2.0 + kt * kt / 6.0)
    } else {
        libm::expm1(kt) / k
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OUParams {
    pub a: f64,
    pub k: f64,
    pub t1: f64,
}

impl OUParams {
    pub fn new(a: f64, k: f64, t1: f64) -> Result<Self> {
        let p = Self { a, k, t1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(invalid(format!("initial value a = {} must be nonnegative", self.a)));
        }
        if !self.k.is_finite() || !self.t1.is_finite() {
            return Err(invalid("k and t1 must be finite"));
        }
        Ok(())
    }

    /// `𝔼U(t) = e^{−k(t−T₁)/2} a`.
    pub fn mean(&self, t: f64) -> f64 {
        libm::exp(-0.5 * self.k * (t - self.t1)) * self.a
    }

    /// `Var U(t)`, the transition variance over `t − T₁`.
    pub fn variance(&self, t: f64) -> f64 {
        ou_transition_variance(t - self.t1, self.k)
    }

    /// `χ(a / (2√β(T − T₁)))`.
    pub fn survival(&self, horizon: f64) -> f64 {
        if self.a <= 0.0 {
            return 0.0;
        }
        if horizon <= 0.0 {
            return 1.0;
        }
        chi(self.a / (2.0 * libm::sqrt(beta(horizon, self.k))))
    }
}

/// `σ²(h) = 4(1 − e^{−kh})/k`, `4h` at `k = 0`.
pub fn ou_transition_variance(h: f64, k: f64) -> f64 {
    let kh = k * h;
    if k.abs() < 1e-8 {
        4.0 * h * (1.0 - kh / 2.0 + kh * kh / 6.0)
    } else {
        -4.0 * libm::expm1(-kh) / k
    }
}

/// Steps of length `h` covering `horizon`; the last one is shortened.
fn grid_steps(h: f64, horizon: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(format!("step h = {h} must be positive")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon {horizon} must be nonnegative")));
    }
    Ok(libm::ceil(horizon / h - 1e-9).max(0.0) as usize)
}

fn step_length(i: usize, n: usize, h: f64, horizon: f64) -> f64 {
    if i + 1 == n {
        horizon - h * i as f64
    } else {
        h
    }
}

/// Gaussian draws consumed pairwise.
struct NormalSource<'a> {
    rng: &'a mut NoiseStream,
    spare: Option<f64>,
}

impl<'a> NormalSource<'a> {
    fn new(rng: &'a mut NoiseStream) -> Self {
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.rng.normal_pair();
        self.spare = Some(b);
        a
    }
}

/// Exact transition sampling of `U` at `T₁ + i h`, `i = 0..`, up to
/// `T₁ + horizon`.
pub fn simulate_ou(params: &OUParams, h: f64, horizon: f64, rng: &mut NoiseStream) -> Result<Vec<f64>> {
    params.validate()?;
    let n = grid_steps(h, horizon)?;
    let mut normals = NormalSource::new(rng);
    let mut out = Vec::with_capacity(n + 1);
    let mut u = params.a;
    out.push(u);
    for i in 0..n {
        let dt = step_length(i, n, h, horizon);
        u = libm::exp(-0.5 * params.k * dt) * u + libm::sqrt(ou_transition_variance(dt, params.k)) * normals.next();
        out.push(u);
    }
    Ok(out)
}

/// Whether the grid-sampled path stays positive up to the horizon.
fn ou_survives(params: &OUParams, h: f64, n: usize, horizon: f64, rng: &mut NoiseStream) -> bool {
    let mut normals = NormalSource::new(rng);
    let decay = libm::exp(-0.5 * params.k * h);
    let sd = libm::sqrt(ou_transition_variance(h, params.k));
    let mut u = params.a;
    if u <= 0.0 {
        return false;
    }
    for i in 0..n {
        u = if i + 1 == n {
            let dt = step_length(i, n, h, horizon);
            libm::exp(-0.5 * params.k * dt) * u + libm::sqrt(ou_transition_variance(dt, params.k)) * normals.next()
        } else {
            decay * u + sd * normals.next()
        };
        if u <= 0.0 {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuSurvival {
    pub estimate: McEstimate,
    /// `χ(a / (2√β(T − T₁)))`.
    pub analytic: f64,
    /// Grid monitoring misses excursions below 0; `2√h` bounds the resulting
    /// overestimate.
    pub discretization_bias: f64,
}

/// Fraction of paths whose grid infimum over `[T₁, T₁ + horizon]` is positive.
/// Path `i` draws from the diffusion lane of `(seed, i)`.
pub fn ou_survival_probability(
    params: &OUParams,
    horizon: f64,
    n_paths: usize,
    h: f64,
    seed: u64,
    exec: &impl PathExecutor,
) -> Result<OuSurvival> {
    params.validate()?;
    if n_paths == 0 {
        return Err(Error::Empty("n_paths"));
    }
    let n = grid_steps(h, horizon)?;
    let p = *params;
    let hits = exec.map_paths(n_paths, |i| {
        let mut rng = NoiseStream::sequential(StreamKey::new(seed, i as u64, Lane::Diffusion));
        ou_survives(&p, h, n, horizon, &mut rng)
    });
    let k = hits.iter().filter(|s| **s).count();
    Ok(OuSurvival {
        estimate: proportion(k, n_paths),
        analytic: params.survival(horizon),
        discretization_bias: 2.0 * libm::sqrt(h),
    })
}

/// The radial drift density `b ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum DriftProfile {
    Zero,
    Constant(f64),
    /// `b(s) = slope · s`.
    Linear(f64),
    /// Piecewise-linear interpolation of `(xs, ys)`, constant outside the table.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl DriftProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !v.is_finite() || v < 0.0;
        match self {
            Self::Zero => Ok(()),
            Self::Constant(c) | Self::Linear(c) if bad(*c) => {
                Err(invalid(format!("drift coefficient {c} must be finite and nonnegative")))
            }
            Self::Constant(_) | Self::Linear(_) => Ok(()),
            Self::Table { xs, ys } => {
                if xs.is_empty() || xs.len() != ys.len() {
                    return Err(invalid("drift table needs matching, nonempty xs and ys"));
                }
                if xs.iter().any(|x| !x.is_finite() || *x < 0.0) || xs.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("drift table xs must be finite, nonnegative and increasing"));
                }
                if ys.iter().any(|y| bad(*y)) {
                    return Err(invalid("drift table values must be finite and nonnegative"));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Linear(c) => c * s,
            Self::Table { xs, ys } => {
                let i = xs.partition_point(|x| *x <= s);
                if i == 0 {
                    ys[0]
                } else if i == xs.len() {
                    ys[i - 1]
                } else {
                    let w = (s - xs[i - 1]) / (xs[i] - xs[i - 1]);
                    ys[i - 1] + w * (ys[i] - ys[i - 1])
                }
            }
        }
    }

    /// `∫₀^r b`, exact for every variant.
    pub fn integral(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => c * r,
            Self::Linear(c) => 0.5 * c * r * r,
            Self::Table { xs, ys } => {
                let mut acc = 0.0;
                let mut prev = 0.0;
                let mut prev_v = self.value(0.0);
                for (x, y) in xs.iter().zip(ys) {
                    if *x <= prev {
                        continue;
                    }
                    if *x >= r {
                        break;
                    }
                    acc += 0.5 * (prev_v + y) * (x - prev);
                    prev = *x;
                    prev_v = *y;
                }
                acc + 0.5 * (prev_v + self.value(r)) * (r - prev)
            }
        }
    }
}

/// `b`, `C₀` and `r₀` of the radial comparison, with
/// `φ(r) = C₀ + ½∫₀^r b` and the cutoff `ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialComparisonSpec {
    pub b: DriftProfile,
    pub c0: f64,
    pub r0: f64,
}

impl RadialComparisonSpec {
    pub fn new(b: DriftProfile, c0: f64, r0: f64) -> Result<Self> {
        let s = Self { b, c0, r0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.b.validate()?;
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(invalid(format!("C0 = {} must be positive", self.c0)));
        }
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return Err(invalid(format!("r0 = {} must be positive", self.r0)));
        }
        Ok(())
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.c0 + 0.5 * self.b.integral(r.max(0.0))
    }

    /// `2/(r − 2r₀)` up to `2r₀ + 1`, zero from `2r₀ + 2`, joined by the
    /// Hermite cubic `2u³ − 2u² − 2u + 2`. Infinite at and below `2r₀`.
    pub fn psi(&self, r: f64) -> f64 {
        let s = r - 2.0 * self.r0;
        if !(s > 0.0) {
            f64::INFINITY
        } else if s <= 1.0 {
            2.0 / s
        } else if s < 2.0 {
            let u = s - 1.0;
            2.0 * ((u - 1.0) * u - 1.0) * u + 2.0
        } else {
            0.0
        }
    }

    pub fn drift(&self, r: f64) -> f64 {
        self.phi(r) + self.psi(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FellerVerdict {
    Explodes,
    Survives,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FellerResult {
    pub verdict: FellerVerdict,
    /// The truncated integral up to `y_max`.
    pub integral: f64,
    /// Decay rate `p` of the inner function, `K(y) ~ y^{−p}`: a rate near 0 or 1
    /// makes the outer integral diverge, a rate near 2 makes it converge.
    pub tail_exponent: f64,
    /// `|I_h − I_{h/2}|`.
    pub richardson: f64,
    /// Whether doubling `y_max` and halving the step keep the verdict.
    pub stable: bool,
}

/// Default quadrature step of the Feller test.
pub const FELLER_STEP: f64 = 1e-3;

/// Feller test with the default step.
pub fn feller_explosion_test(spec: &RadialComparisonSpec, c: f64, y_max: f64) -> Result<FellerResult> {
    feller_explosion_test_with_step(spec, c, y_max, FELLER_STEP)
}

/// `∫₁^Y e^{−∫₁^y 𝐛} ∫₁^y e^{∫₁^z 𝐛} dz dy` with `𝐛(y) = C + ∫₀^y b`.
///
/// The inner function `K(y) = ∫₁^y e^{−∫_z^y 𝐛} dz` solves `K' = 1 − 𝐛K`; it
/// is integrated with an exponentially fitted step, which stays stable however
/// large `𝐛` grows.
pub fn feller_explosion_test_with_step(spec: &RadialComparisonSpec, c: f64, y_max: f64, h: f64) -> Result<FellerResult> {
    spec.validate()?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("C = {c} must be positive")));
    }
    if !(y_max >= 10.0) || !y_max.is_finite() {
        return Err(invalid(format!("y_max = {y_max} must be at least 10")));
    }
    if !(h > 0.0) || h > 0.1 {
        return Err(invalid(format!("quadrature step {h} must lie in (0, 0.1]")));
    }
    let base = feller_quadrature(spec, c, y_max, h)?;
    let half = feller_quadrature(spec, c, y_max, h / 2.0)?;
    let long = feller_quadrature(spec, c, 2.0 * y_max, h)?;
    let verdict = classify(base.1);
    let stable = classify(half.1) == verdict && classify(long.1) == verdict;
    Ok(FellerResult {
        verdict: if stable { verdict } else { FellerVerdict::Inconclusive },
        integral: base.0,
        tail_exponent: base.1,
        richardson: (base.0 - half.0).abs(),
        stable,
    })
}

fn classify(p: f64) -> FellerVerdict {
    if p <= 1.05 {
        FellerVerdict::Survives
    } else if p >= 1.5 {
        FellerVerdict::Explodes
    } else {
        FellerVerdict::Inconclusive
    }
}

/// Returns the integral and the tail exponent.
fn feller_quadrature(spec: &RadialComparisonSpec, c: f64, y_max: f64, h: f64) -> Result<(f64, f64)> {
    let bb = |y: f64| c + spec.b.integral(y);
    let n = libm::ceil((y_max - 1.0) / h) as usize;
    let step = (y_max - 1.0) / n as f64;
    let half = n / 2;
    let mut k = 0.0f64;
    let mut k_half = 0.0;
    let mut integral = 0.0;
    let mut b_prev = bb(1.0);
    for i in 0..n {
        let y = 1.0 + step * i as f64;
        let b_next = bb(y + step);
        let b_avg = (b_prev + 4.0 * bb(y + 0.5 * step) + b_next) / 6.0;
        if !b_avg.is_finite() {
            return Err(Error::Numerical {
                step: i,
                reason: "drift integral is not finite".into(),
            });
        }
        let decay = libm::exp(-b_avg * step);
        let next = decay * k - libm::expm1(-b_avg * step) / b_avg;
        integral += 0.5 * step * (k + next);
        k = next;
        b_prev = b_next;
        if i + 1 == half {
            k_half = k;
        }
    }
    // The midpoint of [1, Y] stands in for Y/2.
    let y_half = 1.0 + step * half as f64;
    let p = libm::log(k_half / k) / libm::log(y_max / y_half);
    Ok((integral, p))
}

/// `ρ^α` on the walk schedule:
/// `ρ_{n+1} = ρ_n + f_n (αλ_{n+1} + α²(φ(ρ_n) + ψ(ρ_n)))`.
pub fn radial_discrete(spec: &RadialComparisonSpec, a0: f64, schedule: &Schedule, lambdas: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(a0 > 2.0 * spec.r0) {
        return Err(Error::Domain(format!("a0 = {a0} must exceed 2 r0 = {}", 2.0 * spec.r0)));
    }
    if lambdas.len() != schedule.steps() {
        return Err(invalid(format!(
            "{} increments for a schedule of {} steps",
            lambdas.len(),
            schedule.steps()
        )));
    }
    let alpha = schedule.alpha;
    let mut out = Vec::with_capacity(lambdas.len() + 1);
    let mut rho = a0;
    out.push(rho);
    for (n, l) in lambdas.iter().enumerate() {
        let next = rho + schedule.fraction(n) * (alpha * l + alpha * alpha * spec.drift(rho));
        if !(next > 2.0 * spec.r0) || !next.is_finite() {
            return Err(Error::Numerical {
                step: n,
                reason: format!("comparison process left (2 r0, ∞): {next}"),
            });
        }
        rho = next;
        out.push(rho);
    }
    Ok(out)
}

/// Euler–Maruyama for `dρ = dB + (φ + ψ)(ρ) dt` with step `h`; crossings of
/// `2r₀` are reflected back into the domain.
pub fn radial_continuous(
    spec: &RadialComparisonSpec,
    a0: f64,
    h: f64,
    horizon: f64,
    rng: &mut NoiseStream,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let floor = 2.0 * spec.r0;
    if !(a0 > floor) {
        return Err(Error::Domain(format!("a0 = {a0} must exceed 2 r0 = {floor}")));
    }
    let n = grid_steps(h, horizon)?;
    let mut normals = NormalSource::new(rng);
    let mut out = Vec::with_capacity(n + 1);
    let mut rho = a0;
    out.push(rho);
    for i in 0..n {
        let dt = step_length(i, n, h, horizon);
        let mut next = rho + spec.drift(rho) * dt + libm::sqrt(dt) * normals.next();
        if next <= floor {
            next = (2.0 * floor - next).max(floor * (1.0 + 1e-12) + f64::MIN_POSITIVE);
        }
        rho = next;
        out.push(rho);
    }
    Ok(out)
}

/// `λ_{n+1} = ⟨ξ̃_{n+1}, γ̇(d)⟩` along a walk, `γ` the unit-speed minimal
/// geodesic from `o` to `X_n`. Within `r₀` of `o` the fixed first frame
/// direction is used instead: `λ = √(m+2) ξ₁`.
///
/// The walk is assumed to use the default frame field.
pub fn radial_lambdas(model: &ManifoldModel, path: &WalkPath, o: &Point, r0: f64) -> Result<Vec<f64>> {
    let s = libm::sqrt(model.dim() as f64 + 2.0);
    let mut out = Vec::with_capacity(path.noise_record.len());
    for (n, xi) in path.noise_record.iter().enumerate() {
        let t = path.schedule.times[n];
        let x = &path.skeleton[n];
        let d = model.distance(t, o, x)?;
        if d < r0 {
            out.push(s * xi[0]);
            continue;
        }
        let geo = model.minimal_geodesic(t, o, x)?;
        let noise = NoiseSample::from_frame(&model.frame_at(t, x), xi);
        let e = model.geodesic_velocity(&geo, geo.length);
        let e = model.project_tangent(x, &e.components);
        out.push(model.inner(t, &noise.xi_tilde, &e));
    }
    Ok(out)
}
