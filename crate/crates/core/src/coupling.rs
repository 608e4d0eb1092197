//! Coupled geodesic random walks.
//!
//! Both walks use the same ball noise `ξ`. The first walk reads it through the
//! frame `Φ₁ = Φ(X₁)`; the second through `Φ₂ = m ∘ Φ₁` (reflection) or
//! `Φ₂ = P ∘ Φ₁` (parallel transport), where `P` is parallel transport along the
//! minimal geodesic from `X₁` to `X₂` and `m` additionally reflects the
//! geodesic direction. Each marginal is therefore a walk in its own right.

use alloc::format;
use alloc::vec::Vec;

use crate::comparison::{beta, chi};
use crate::error::{invalid, Error, Result};
use crate::manifold::{Coords, Geodesic, ManifoldModel, Point, TangentVector};
use crate::walk::{noise_at, step_vector, walk_stream, NoiseSample, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingKind {
    Reflection,
    ParallelTransport,
}

#[derive(Clone, Debug)]
pub struct CouplingConfig {
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub seed: u64,
    pub start1: Point,
    pub start2: Point,
    pub kind: CouplingKind,
    /// Pairs within this distance are declared coupled.
    pub delta_couple: f64,
    pub k: f64,
    pub stick_after_coupling: bool,
    pub use_drift: bool,
}

impl CouplingConfig {
    /// Defaults: `δ = 2α`, `k = 0`, sticking on, no drift.
    pub fn new(alpha: f64, t1: f64, t2: f64, seed: u64, start1: Point, start2: Point, kind: CouplingKind) -> Self {
        Self {
            alpha,
            t1,
            t2,
            seed,
            start1,
            start2,
            kind,
            delta_couple: 2.0 * alpha,
            k: 0.0,
            stick_after_coupling: true,
            use_drift: false,
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.alpha, self.t1, self.t2)
    }

    pub fn validate(&self, model: &ManifoldModel) -> Result<()> {
        self.schedule()?;
        if !(self.delta_couple >= self.alpha * (1.0 - 1e-12)) {
            return Err(invalid(format!(
                "delta_couple = {} is below alpha = {}",
                self.delta_couple, self.alpha
            )));
        }
        if !self.k.is_finite() {
            return Err(invalid("k must be finite"));
        }
        if !model.is_closed_form() {
            return Err(Error::Unsupported {
                model: model.kind().name(),
                op: "coupled walk",
            });
        }
        let (a, b) = model.window();
        if self.t1 < a - 1e-12 || self.t2 > b + 1e-12 {
            return Err(invalid("coupling window exceeds the model window"));
        }
        for x in [&self.start1, &self.start2] {
            if x.len() != model.ambient_dim() || model.constraint_residual(x) > 1e-9 {
                return Err(invalid("start point is not on the manifold"));
            }
        }
        Ok(())
    }
}

/// A coupled pair of skeletons.
#[derive(Clone, Debug)]
pub struct CoupledPath {
    pub schedule: Schedule,
    pub first: Vec<Point>,
    pub second: Vec<Point>,
    /// `d_{g(t_n)}(X₁(t_n), X₂(t_n))`.
    pub distance: Vec<f64>,
    /// `λ*_{n+1}` for each step `n`.
    pub lambda_star: Vec<f64>,
    pub coupling_time: Option<f64>,
    pub coupled: Vec<bool>,
    pub noise_record: Vec<Coords>,
    /// `ξ̃²_{n+1}` for each step, at `X₂(t_n)`.
    pub second_noise: Vec<TangentVector>,
}

impl CoupledPath {
    /// Whether the pair is still apart at the end of the window.
    pub fn survived(&self) -> bool {
        self.coupling_time.is_none()
    }

    /// Index of the first coupled skeleton time, if any.
    pub fn coupling_index(&self) -> Option<usize> {
        self.coupled.iter().position(|c| *c)
    }
}

/// `m_{xy}(v) = Pv − 2⟨Pv, γ̇(d)⟩ γ̇(d)` for `v ∈ T_x M`.
pub fn reflection_map(model: &ManifoldModel, t: f64, geo: &Geodesic, v: &TangentVector) -> Result<TangentVector> {
    if !(geo.length > 0.0) {
        return Err(Error::Degenerate("reflection along a zero-length geodesic".into()));
    }
    let pv = model.parallel_transport(geo, v)?;
    let e = model.geodesic_velocity(geo, geo.length);
    let a = model.inner(t, &pv, &e);
    Ok(pv.add_scaled(-2.0 * a, &e))
}

/// Result of one coupled step.
#[derive(Clone, Debug)]
pub struct CoupledStep {
    pub first: Point,
    pub second: Point,
    pub lambda_star: f64,
    pub noise: NoiseSample,
    pub second_noise: TangentVector,
}

/// One synchronized step of both walks, scaled by `fraction`.
///
/// `λ* = 2⟨ξ̃¹, γ̇_{X₂X₁}(d)⟩ = −2⟨ξ̃¹, γ̇_{X₁X₂}(0)⟩`; on the diagonal
/// (`coupled`, or coinciding points) both walks share `Φ(X₁)` and
/// `λ* = 2√(m+2) ξ₁`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_step(
    model: &ManifoldModel,
    t: f64,
    x1: &Point,
    x2: &Point,
    xi: &[f64],
    alpha: f64,
    kind: CouplingKind,
    use_drift: bool,
    fraction: f64,
    coupled: bool,
) -> Result<CoupledStep> {
    let frame = model.frame_at(t, x1);
    let noise = NoiseSample::from_frame(&frame, xi);
    let s = libm::sqrt(model.dim() as f64 + 2.0);
    let diagonal = coupled || x1.max_abs_diff(x2) < 1e-12;
    let (xi2, lambda_star) = if diagonal {
        (model.project_tangent(x2, &noise.xi_tilde.components), 2.0 * s * xi[0])
    } else {
        let geo = model.minimal_geodesic(t, x1, x2)?;
        let moved = match kind {
            CouplingKind::Reflection => reflection_map(model, t, &geo, &noise.xi_tilde)?,
            CouplingKind::ParallelTransport => model.parallel_transport(&geo, &noise.xi_tilde)?,
        };
        let lambda = -2.0 * model.inner(t, &noise.xi_tilde, &geo.initial_velocity);
        (model.project_tangent(x2, &moved.components), lambda)
    };
    let v1 = step_vector(model, t, x1, &noise.xi_tilde, alpha, use_drift);
    let first = model.exp(t, x1, &v1.scaled(fraction))?;
    let second = if diagonal && x1 == x2 {
        first.clone()
    } else {
        let v2 = step_vector(model, t, x2, &xi2, alpha, use_drift);
        model.exp(t, x2, &v2.scaled(fraction))?
    };
    Ok(CoupledStep {
        first,
        second,
        lambda_star,
        noise,
        second_noise: xi2,
    })
}

pub fn run_coupled(model: &ManifoldModel, cfg: &CouplingConfig, path: u64) -> Result<CoupledPath> {
    cfg.validate(model)?;
    let schedule = cfg.schedule()?;
    let m = model.dim();
    let n = schedule.steps();
    let mut rng = walk_stream(cfg.seed, path, m);
    let mut out = CoupledPath {
        first: Vec::with_capacity(n + 1),
        second: Vec::with_capacity(n + 1),
        distance: Vec::with_capacity(n + 1),
        lambda_star: Vec::with_capacity(n),
        coupling_time: None,
        coupled: Vec::with_capacity(n + 1),
        noise_record: Vec::with_capacity(n),
        second_noise: Vec::with_capacity(n),
        schedule,
    };
    let (mut x1, mut x2) = (cfg.start1.clone(), cfg.start2.clone());
    let mut coupled = false;
    for i in 0..=n {
        let t = out.schedule.times[i];
        let mut d = model.distance(t, &x1, &x2)?;
        if !coupled && d <= cfg.delta_couple {
            coupled = true;
            out.coupling_time = Some(t);
        }
        if coupled && cfg.stick_after_coupling {
            x2 = x1.clone();
            d = 0.0;
        }
        out.first.push(x1.clone());
        out.second.push(x2.clone());
        out.distance.push(d);
        out.coupled.push(coupled);
        if i == n {
            break;
        }
        let xi = noise_at(&mut rng, i, m);
        let sticky = coupled && cfg.stick_after_coupling;
        let st = coupled_step(
            model,
            t,
            &x1,
            &x2,
            &xi,
            cfg.alpha,
            cfg.kind,
            cfg.use_drift,
            out.schedule.fraction(i),
            sticky,
        )
        .map_err(|e| Error::Numerical {
            step: i,
            reason: format!("{e}"),
        })?;
        out.lambda_star.push(st.lambda_star);
        out.noise_record.push(xi);
        out.second_noise.push(st.second_noise);
        x1 = st.first;
        x2 = st.second;
    }
    Ok(out)
}

/// `χ(d₀ / (2√β(T − T₁)))`, the bound on the probability that the coupled
/// pair stays apart up to the horizon.
pub fn coupling_probability_bound(d0: f64, k: f64, horizon: f64) -> f64 {
    if d0 <= 0.0 {
        return 0.0;
    }
    if horizon <= 0.0 {
        return 1.0;
    }
    chi(d0 / (2.0 * libm::sqrt(beta(horizon, k))))
}

/// `U(t_n) = e^{−k(t_n−T₁)/2}(a + α Σ_{j≤n} f_j e^{k(t_{j−1}−T₁)/2} λ*_j)`,
/// with `a` the initial distance and `f_j` the step fractions.
pub fn dominating_process(coupled: &CoupledPath, k: f64) -> Vec<f64> {
    let s = &coupled.schedule;
    let a = coupled.distance[0];
    let mut acc = a;
    let mut out = Vec::with_capacity(s.times.len());
    out.push(a);
    for (j, l) in coupled.lambda_star.iter().enumerate() {
        acc += s.alpha * s.fraction(j) * libm::exp(0.5 * k * (s.times[j] - s.t1)) * l;
        out.push(libm::exp(-0.5 * k * (s.times[j + 1] - s.t1)) * acc);
    }
    out
}

#[cfg(test)]
mod tests;
