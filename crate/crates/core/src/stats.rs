//! Monte Carlo aggregation, distribution distances and the verification
//! experiments.
//!
//! Every experiment maps path indices through a [`PathExecutor`] and folds the
//! per-path results in index order, so reports do not depend on scheduling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::comparison::{beta, radial_discrete, radial_lambdas, RadialComparisonSpec};
use crate::coupling::{
    coupling_probability_bound, dominating_process, run_coupled, CouplingConfig, CouplingKind,
};
use crate::error::{invalid, Error, Result};
use crate::exec::PathExecutor;
use crate::manifold::{ManifoldModel, Point};
use crate::rng::{Lane, NoiseStream, StreamKey};
use crate::walk::{run_walk, WalkConfig};

const Z95: f64 = 1.959963984540054;

/// A Monte Carlo mean with its standard error and a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("samples"));
        }
        let mut acc = Accumulator::new();
        samples.iter().for_each(|x| acc.push(*x));
        Ok(acc.estimate())
    }

    /// A deterministic value (zero standard error).
    pub fn exact(n: usize, value: f64) -> Self {
        Self {
            n,
            mean: value,
            stderr: 0.0,
            ci95: (value, value),
        }
    }
}

/// Streaming mean and variance, mergeable across partitions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let (na, nb) = (self.n as f64, other.n as f64);
        let d = other.mean - self.mean;
        Self {
            n,
            mean: (na * self.mean + nb * other.mean) / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Normal-approximation estimate; a single sample has zero spread.
    pub fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        let se = if self.n > 0 { libm::sqrt(var / self.n as f64) } else { 0.0 };
        McEstimate {
            n: self.n,
            mean: self.mean,
            stderr: se,
            ci95: (self.mean - Z95 * se, self.mean + Z95 * se),
        }
    }
}

/// Proportion `k/n` with binomial standard error and a Wilson interval.
pub fn proportion(k: usize, n: usize) -> McEstimate {
    if n == 0 {
        return McEstimate::exact(0, 0.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let se = libm::sqrt(p * (1.0 - p) / nf);
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = Z95 / (1.0 + z2 / nf) * libm::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf));
    McEstimate {
        n,
        mean: p,
        stderr: se,
        ci95: ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0)),
    }
}

/// Outcome of comparing an estimate against a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub id: String,
    pub estimate: McEstimate,
    pub bound: f64,
    /// `bound + 3·stderr − estimate`.
    pub margin: f64,
    pub pass: bool,
    /// Declared bias allowances added to the pass threshold.
    pub bias_terms: Vec<(String, f64)>,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
}

impl VerificationReport {
    /// `pass = estimate ≤ bound + 3·stderr + Σ bias`.
    pub fn new(
        id: impl Into<String>,
        estimate: McEstimate,
        bound: f64,
        bias_terms: Vec<(String, f64)>,
        params: Vec<(String, f64)>,
        seed: u64,
    ) -> Self {
        let bias: f64 = bias_terms.iter().map(|(_, b)| b).sum();
        let slack = bound + 3.0 * estimate.stderr;
        Self {
            id: id.into(),
            estimate,
            bound,
            margin: slack - estimate.mean,
            pass: estimate.mean <= slack + bias,
            bias_terms,
            params,
            seed,
        }
    }
}

fn param(name: &str, v: f64) -> (String, f64) {
    (String::from(name), v)
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn need_paths(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Empty("n_paths"))
    } else {
        Ok(())
    }
}

fn coupling_params(model: &ManifoldModel, cfg: &CouplingConfig, n_paths: usize) -> Result<(f64, Vec<(String, f64)>)> {
    let d0 = model.distance(cfg.t1, &cfg.start1, &cfg.start2)?;
    Ok((
        d0,
        alloc::vec![
            param("alpha", cfg.alpha),
            param("delta_couple", cfg.delta_couple),
            param("k", cfg.k),
            param("d0", d0),
            param("t1", cfg.t1),
            param("t2", cfg.t2),
            param("n_paths", n_paths as f64),
        ],
    ))
}

/// Fraction of reflection-coupled pairs still apart at `T₂`, against
/// `χ(d₀ / (2√β(T₂ − T₁)))`.
pub fn estimate_coupling_survival(
    model: &ManifoldModel,
    cfg: &CouplingConfig,
    n_paths: usize,
    exec: &impl PathExecutor,
) -> Result<VerificationReport> {
    if cfg.kind != CouplingKind::Reflection {
        return Err(invalid("coupling survival needs the reflection coupling"));
    }
    need_paths(n_paths)?;
    cfg.validate(model)?;
    let (d0, params) = coupling_params(model, cfg, n_paths)?;
    let survived = collect(exec.map_paths(n_paths, |i| run_coupled(model, cfg, i as u64).map(|p| p.survived())))?;
    let k = survived.iter().filter(|s| **s).count();
    let bound = coupling_probability_bound(d0, cfg.k, cfg.t2 - cfg.t1);
    Ok(VerificationReport::new(
        "coupling-survival",
        proportion(k, n_paths),
        bound,
        Vec::new(),
        params,
        cfg.seed,
    ))
}

/// `max_{s ≤ t} e^{k(t−s)/2} d_t − d_s` along one path.
pub fn max_contraction_violation(times: &[f64], dist: &[f64], k: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    if k == 0.0 {
        let mut min_d = f64::INFINITY;
        for d in dist {
            min_d = min_d.min(*d);
            worst = worst.max(d - min_d);
        }
        return worst;
    }
    for (j, (t, dt)) in times.iter().zip(dist).enumerate() {
        for (s, ds) in times[..=j].iter().zip(&dist[..=j]) {
            worst = worst.max(libm::exp(0.5 * k * (t - s)) * dt - ds);
        }
    }
    worst
}

/// Worst contraction violation over parallel-coupled paths, against `c·α`.
pub fn check_contraction(
    model: &ManifoldModel,
    cfg: &CouplingConfig,
    n_paths: usize,
    c: f64,
    exec: &impl PathExecutor,
) -> Result<VerificationReport> {
    if cfg.kind != CouplingKind::ParallelTransport {
        return Err(invalid("contraction check needs the parallel-transport coupling"));
    }
    need_paths(n_paths)?;
    cfg.validate(model)?;
    let (_, mut params) = coupling_params(model, cfg, n_paths)?;
    params.push(param("c", c));
    let worst = collect(exec.map_paths(n_paths, |i| {
        run_coupled(model, cfg, i as u64).map(|p| max_contraction_violation(&p.schedule.times, &p.distance, cfg.k))
    }))?;
    let max = worst.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    Ok(VerificationReport::new(
        "contraction",
        McEstimate::exact(n_paths, max),
        c * cfg.alpha,
        Vec::new(),
        params,
        cfg.seed,
    ))
}

/// `|𝔼f(X₁(T₂)) − 𝔼f(X₂(T₂))|` from reflection-coupled pairs, against
/// `d(x, y) · osc(f) / √(2πβ(T₂ − T₁))`.
///
/// The estimate is the mean of the per-pair differences, sign-normalised so
/// that it is nonnegative.
pub fn check_gradient_estimate<F>(
    model: &ManifoldModel,
    cfg: &CouplingConfig,
    f: F,
    osc: f64,
    n_paths: usize,
    exec: &impl PathExecutor,
) -> Result<VerificationReport>
where
    F: Fn(&Point) -> f64 + Sync + Send,
{
    if !(osc >= 0.0) || !osc.is_finite() {
        return Err(invalid(format!("oscillation {osc} must be finite and nonnegative")));
    }
    need_paths(n_paths)?;
    cfg.validate(model)?;
    let (d0, mut params) = coupling_params(model, cfg, n_paths)?;
    params.push(param("osc", osc));
    let diffs = collect(exec.map_paths(n_paths, |i| {
        run_coupled(model, cfg, i as u64).map(|p| f(p.first.last().unwrap()) - f(p.second.last().unwrap()))
    }))?;
    let mut est = McEstimate::from_samples(&diffs)?;
    if est.mean < 0.0 {
        est.mean = -est.mean;
        est.ci95 = (-est.ci95.1, -est.ci95.0);
    }
    let horizon = cfg.t2 - cfg.t1;
    let bound = d0 * osc / libm::sqrt(core::f64::consts::TAU * beta(horizon, cfg.k));
    Ok(VerificationReport::new("gradient", est, bound, Vec::new(), params, cfg.seed))
}

/// Kolmogorov–Smirnov statistic with its asymptotic threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub threshold: f64,
    pub level: f64,
    pub pass: bool,
}

/// Asymptotic Kolmogorov critical value `c(level)` with
/// `P[√n D > c] ≈ level`.
pub fn kolmogorov_critical(level: f64) -> f64 {
    libm::sqrt(-0.5 * libm::log(level / 2.0))
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level {level} must lie in (0, 1)")));
    }
    Ok(())
}

/// One-sample test of `samples` against `cdf`; needs at least 100 samples.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<KsResult> {
    check_level(level)?;
    if samples.len() < 100 {
        return Err(invalid(format!("KS test needs at least 100 samples, got {}", samples.len())));
    }
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let threshold = kolmogorov_critical(level) / libm::sqrt(n);
    Ok(KsResult {
        statistic: d,
        threshold,
        level,
        pass: d <= threshold,
    })
}

/// Two-sample test; the statistic is 1 when the samples do not overlap.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsResult> {
    check_level(level)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let threshold = kolmogorov_critical(level) * libm::sqrt((na + nb) / (na * nb));
    Ok(KsResult {
        statistic: d,
        threshold,
        level,
        pass: d <= threshold,
    })
}

/// `W₁` between two empirical laws: the mean gap of sorted samples for equal
/// sizes, `∫|F_a − F_b|` otherwise.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    if a.len() == b.len() {
        return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut acc = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.min(*q),
            (Some(p), None) => *p,
            (None, Some(q)) => *q,
            (None, None) => break,
        };
        acc += (i as f64 / na - j as f64 / nb).abs() * (x - prev);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        prev = x;
    }
    Ok(acc)
}

/// Grid intervals used by [`w1_to_cdf`].
pub const W1_GRID: usize = 20_000;

/// `∫_lo^hi |F_emp − F|` by the midpoint rule on [`W1_GRID`] intervals.
pub fn w1_to_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if !(hi > lo) {
        return Err(invalid("empty integration range"));
    }
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let h = (hi - lo) / W1_GRID as f64;
    let mut idx = 0usize;
    let mut acc = 0.0;
    for i in 0..W1_GRID {
        let x = lo + (i as f64 + 0.5) * h;
        while idx < v.len() && v[idx] <= x {
            idx += 1;
        }
        acc += (idx as f64 / n - cdf(x)).abs();
    }
    Ok(acc * h)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// CDF on `[−π, π]` of the wrapped normal law with variance `sigma2`:
/// `(θ + π)/2π + (1/π) Σ_{n≥1} e^{−n²σ²/2} sin(nθ)/n`.
pub fn wrapped_gaussian_cdf(theta: f64, sigma2: f64) -> f64 {
    use core::f64::consts::PI;
    if theta <= -PI {
        return 0.0;
    }
    if theta >= PI {
        return 1.0;
    }
    let mut acc = (theta + PI) / (2.0 * PI);
    for n in 1..100_000u32 {
        let nf = n as f64;
        let w = libm::exp(-0.5 * nf * nf * sigma2);
        if w < 1e-17 {
            break;
        }
        acc += w * libm::sin(nf * theta) / (nf * PI);
    }
    acc.clamp(0.0, 1.0)
}

/// Angle of a point on the unit circle, `atan2(x₀, x₁)`, so that the origin
/// `(0, 1)` has angle 0.
pub fn circle_angle(x: &Point) -> f64 {
    libm::atan2(x.coords[0], x.coords[1])
}

/// Bootstrap standard error of `statistic` from `b` resamples, drawn on the
/// bootstrap lane of `seed`.
pub fn bootstrap_stderr(samples: &[f64], statistic: impl Fn(&[f64]) -> f64, b: usize, seed: u64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if b < 2 {
        return Err(invalid("bootstrap needs at least two resamples"));
    }
    let n = samples.len();
    let mut acc = Accumulator::new();
    let mut buf = alloc::vec![0.0; n];
    for r in 0..b {
        let mut rng = NoiseStream::sequential(StreamKey::new(seed, r as u64, Lane::Bootstrap));
        for slot in buf.iter_mut() {
            *slot = samples[rng.index(n)];
        }
        acc.push(statistic(&buf));
    }
    let m2 = acc.m2;
    Ok(libm::sqrt(m2 / (b - 1) as f64))
}

/// Default number of bootstrap resamples.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// A reference law for [`convergence_diagnostic`], with the range used for
/// `W₁` integration.
pub struct ReferenceLaw<'a> {
    pub cdf: &'a (dyn Fn(f64) -> f64 + Sync),
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub n: usize,
    /// `W₁` to the reference law, or to the smallest-`α` sample without one.
    pub w1: f64,
    pub w1_stderr: f64,
    pub ks: Option<KsResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `W₁` non-increasing along the decreasing `α` list within three combined
    /// bootstrap standard errors.
    pub trend_ok: bool,
}

/// Terminal samples `summary(X^α(T₂))` for each `α`.
pub fn terminal_samples<F>(
    model: &ManifoldModel,
    cfg: &WalkConfig,
    alpha: f64,
    n_paths: usize,
    summary: &F,
    exec: &impl PathExecutor,
) -> Result<Vec<f64>>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let mut c = cfg.clone();
    c.alpha = alpha;
    collect(exec.map_paths(n_paths, |i| {
        run_walk(model, &c, i as u64).map(|p| summary(p.skeleton.last().unwrap()))
    }))
}

/// Distance of the terminal law of `summary(X^α(T₂))` from the limit law along
/// a decreasing list of `α`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_diagnostic<F>(
    model: &ManifoldModel,
    cfg: &WalkConfig,
    alphas: &[f64],
    n_paths: usize,
    summary: F,
    reference: Option<&ReferenceLaw<'_>>,
    ks_level: f64,
    exec: &impl PathExecutor,
) -> Result<ConvergenceTable>
where
    F: Fn(&Point) -> f64 + Sync,
{
    need_paths(n_paths)?;
    if alphas.is_empty() {
        return Err(Error::Empty("alphas"));
    }
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("alphas must be strictly decreasing"));
    }
    let samples: Vec<Vec<f64>> = alphas
        .iter()
        .map(|a| terminal_samples(model, cfg, *a, n_paths, &summary, exec))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(alphas.len());
    for (i, (alpha, s)) in alphas.iter().zip(&samples).enumerate() {
        let boot_seed = cfg.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let (w1, se, ks) = match reference {
            Some(r) => {
                let w1 = w1_to_cdf(s, r.cdf, r.lo, r.hi)?;
                let se = bootstrap_stderr(
                    s,
                    |b| w1_to_cdf(b, r.cdf, r.lo, r.hi).unwrap_or(f64::NAN),
                    BOOTSTRAP_RESAMPLES,
                    boot_seed,
                )?;
                let ks = if s.len() >= 100 {
                    Some(ks_statistic(s, r.cdf, ks_level)?)
                } else {
                    None
                };
                (w1, se, ks)
            }
            None => {
                let last = samples.last().unwrap();
                let w1 = wasserstein1_1d(s, last)?;
                let se = bootstrap_stderr(
                    s,
                    |b| wasserstein1_1d(b, last).unwrap_or(f64::NAN),
                    BOOTSTRAP_RESAMPLES,
                    boot_seed,
                )?;
                (w1, se, None)
            }
        };
        rows.push(ConvergenceRow {
            alpha: *alpha,
            n: s.len(),
            w1,
            w1_stderr: se,
            ks,
        });
    }
    let trend_ok = rows
        .windows(2)
        .all(|w| w[1].w1 <= w[0].w1 + 3.0 * libm::hypot(w[0].w1_stderr, w[1].w1_stderr));
    Ok(ConvergenceTable { rows, trend_ok })
}

/// `P[σ̂_R ≤ T₂]` for the walk.
pub fn exit_probability(
    model: &ManifoldModel,
    cfg: &WalkConfig,
    radius: f64,
    n_paths: usize,
    exec: &impl PathExecutor,
) -> Result<McEstimate> {
    need_paths(n_paths)?;
    let o = cfg.reference_point(model);
    let exits = collect(exec.map_paths(n_paths, |i| {
        run_walk(model, cfg, i as u64).and_then(|p| crate::walk::exit_time(&p, model, &o, radius).map(|e| e.is_some()))
    }))?;
    Ok(proportion(exits.iter().filter(|e| **e).count(), n_paths))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominationResult {
    /// Fraction of paths with at least one violation.
    pub violations: McEstimate,
    pub margin: f64,
    /// Smallest value of the comparison process over all paths.
    pub min_comparison: f64,
}

/// Fraction of walk paths with `d(o, X_n) > ρ_n + margin` at some skeleton
/// time before `σ̂_R`, `ρ` driven by each path's own noise.
#[allow(clippy::too_many_arguments)]
pub fn radial_domination_fraction(
    model: &ManifoldModel,
    cfg: &WalkConfig,
    spec: &RadialComparisonSpec,
    margin: f64,
    radius: f64,
    n_paths: usize,
    exec: &impl PathExecutor,
) -> Result<DominationResult> {
    need_paths(n_paths)?;
    let o = cfg.reference_point(model);
    let per_path = collect(exec.map_paths(n_paths, |i| -> Result<(bool, f64)> {
        let path = run_walk(model, cfg, i as u64)?;
        let lambdas = radial_lambdas(model, &path, &o, spec.r0)?;
        let a0 = model.distance(cfg.t1, &o, &cfg.start)? + 3.0 * spec.r0;
        let rho = radial_discrete(spec, a0, &path.schedule, &lambdas)?;
        let mut violated = false;
        for (n, (t, x)) in path.schedule.times.iter().zip(&path.skeleton).enumerate() {
            let d = model.distance(*t, &o, x)?;
            if d > radius - 1.0 {
                break;
            }
            if d > rho[n] + margin {
                violated = true;
                break;
            }
        }
        Ok((violated, rho.iter().fold(f64::INFINITY, |a, b| a.min(*b))))
    }))?;
    Ok(DominationResult {
        violations: proportion(per_path.iter().filter(|p| p.0).count(), n_paths),
        margin,
        min_comparison: per_path.iter().fold(f64::INFINITY, |a, p| a.min(p.1)),
    })
}

/// Fraction of coupled paths with `d(X₁, X₂) > U + margin` at some skeleton
/// time before coupling or before either walk leaves the ball of radius
/// `R − 1` about `o`.
#[allow(clippy::too_many_arguments)]
pub fn chain_domination_fraction(
    model: &ManifoldModel,
    cfg: &CouplingConfig,
    o: &Point,
    margin: f64,
    radius: f64,
    n_paths: usize,
    exec: &impl PathExecutor,
) -> Result<DominationResult> {
    need_paths(n_paths)?;
    let per_path = collect(exec.map_paths(n_paths, |i| -> Result<(bool, f64)> {
        let path = run_coupled(model, cfg, i as u64)?;
        let u = dominating_process(&path, cfg.k);
        let stop = path.coupling_index().unwrap_or(path.distance.len());
        let mut violated = false;
        for n in 0..stop {
            let t = path.schedule.times[n];
            if model.distance(t, o, &path.first[n])? > radius - 1.0
                || model.distance(t, o, &path.second[n])? > radius - 1.0
            {
                break;
            }
            if path.distance[n] > u[n] + margin {
                violated = true;
                break;
            }
        }
        Ok((violated, u.iter().fold(f64::INFINITY, |a, b| a.min(*b))))
    }))?;
    Ok(DominationResult {
        violations: proportion(per_path.iter().filter(|p| p.0).count(), n_paths),
        margin,
        min_comparison: per_path.iter().fold(f64::INFINITY, |a, p| a.min(p.1)),
    })
}
