//! Second-variation quantities along a geodesic: the comparison ODE `G`,
//! index forms, dagger fields and the time derivative of distance.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::manifold::{Geodesic, ManifoldModel, TangentVector};

/// Default number of grid intervals along a geodesic.
pub const DEFAULT_GRID: usize = 128;
const MIN_GRID: usize = 16;

/// Solution of `G'' = −Ric(γ̇, γ̇) G / (m − 1)`, `G(0) = 0`, `G'(0) = 1`, on a
/// uniform grid of `[0, length]`.
#[derive(Clone, Debug)]
pub struct GreenSolution {
    pub geodesic: Geodesic,
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
}

impl GreenSolution {
    /// `G'(L) / G(L)` at the end of the geodesic.
    pub fn log_derivative_at_end(&self) -> f64 {
        let n = self.g.len() - 1;
        self.g_prime[n] / self.g[n]
    }

    /// Rows `(u, G(u), G'(u))`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.g)
            .zip(&self.g_prime)
            .map(|((u, g), gp)| (*u, *g, *gp))
    }
}

/// A vector field sampled at `u_i = i · length / n` along a geodesic.
#[derive(Clone, Debug)]
pub struct SampledField {
    pub grid: Vec<f64>,
    pub values: Vec<TangentVector>,
}

fn check_geodesic(geo: &Geodesic) -> Result<()> {
    if !(geo.length > 0.0) || !geo.length.is_finite() {
        return Err(Error::Degenerate("geodesic has zero length".into()));
    }
    Ok(())
}

fn uniform_grid(length: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| length * i as f64 / n as f64).collect()
}

pub fn solve_green(model: &ManifoldModel, geo: &Geodesic, n_grid: usize) -> Result<GreenSolution> {
    if model.dim() == 1 {
        return Err(Error::Unsupported {
            model: model.kind().name(),
            op: "green function in dimension 1",
        });
    }
    if n_grid < MIN_GRID {
        return Err(invalid(format!("grid of {n_grid} intervals is below {MIN_GRID}")));
    }
    check_geodesic(geo)?;
    let t = geo.time;
    let m1 = model.dim() as f64 - 1.0;
    // Samples at half-steps feed the RK4 midpoint stages.
    let coef: Vec<f64> = model
        .geodesic_trace(geo, 2 * n_grid)
        .iter()
        .map(|(_, v)| model.ricci_quadratic(t, v) / m1)
        .collect();
    let h = geo.length / n_grid as f64;
    let mut g = Vec::with_capacity(n_grid + 1);
    let mut gp = Vec::with_capacity(n_grid + 1);
    let (mut y, mut yp) = (0.0f64, 1.0f64);
    g.push(y);
    gp.push(yp);
    for i in 0..n_grid {
        let (q0, qh, q1) = (coef[2 * i], coef[2 * i + 1], coef[2 * i + 2]);
        let k1 = (yp, -q0 * y);
        let k2 = (yp + 0.5 * h * k1.1, -qh * (y + 0.5 * h * k1.0));
        let k3 = (yp + 0.5 * h * k2.1, -qh * (y + 0.5 * h * k2.0));
        let k4 = (yp + h * k3.1, -q1 * (y + h * k3.0));
        y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        yp += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        g.push(y);
        gp.push(yp);
    }
    Ok(GreenSolution {
        geodesic: geo.clone(),
        grid: uniform_grid(geo.length, n_grid),
        g,
        g_prime: gp,
    })
}

/// Fourth-order finite-difference derivative of uniformly sampled values.
fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
            } else if i + 4 < n {
                (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] - 3.0 * f[i + 4])
                    / (12.0 * h)
            } else {
                (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4])
                    / (12.0 * h)
            }
        })
        .collect()
}

/// Composite Simpson rule on uniform samples, trapezoid on the last interval
/// when their count is odd.
fn quadrature(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let even = n - n % 2;
    let mut acc = f[0] + f[even];
    for (i, v) in f.iter().enumerate().take(even).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = acc * h / 3.0;
    if even < n {
        total += 0.5 * h * (f[n - 1] + f[n]);
    }
    total
}

/// `I(V) = ∫ (|∇_γ̇ V|² − ⟨R(V, γ̇)γ̇, V⟩) ds` for `g(t)`.
///
/// `∇_γ̇ V` is taken in a parallel orthonormal frame along the geodesic, where it
/// is the derivative of the frame coefficients of `V`.
pub fn index_form(model: &ManifoldModel, t: f64, geo: &Geodesic, field: &SampledField) -> Result<f64> {
    check_geodesic(geo)?;
    let n = field.values.len().saturating_sub(1);
    if n < MIN_GRID {
        return Err(invalid(format!("field sampled on {n} intervals, need {MIN_GRID}")));
    }
    let h = geo.length / n as f64;
    let frame = model.frame_at(t, &geo.start);
    let frames = model.parallel_frame_along(geo, &frame.vectors, n);
    let trace = model.geodesic_trace(geo, n);
    let dim = frame.vectors.len();
    let mut coeffs = alloc::vec![Vec::with_capacity(n + 1); dim];
    let mut curv = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let v = &field.values[i];
        for (j, c) in coeffs.iter_mut().enumerate() {
            c.push(model.inner(t, &frames[i][j], v));
        }
        let vel = &trace[i].1;
        curv.push(model.curvature_form(t, v, vel));
    }
    let mut integrand = alloc::vec![0.0; n + 1];
    for c in &coeffs {
        for (acc, d) in integrand.iter_mut().zip(derivative(c, h)) {
            *acc += d * d;
        }
    }
    for (acc, k) in integrand.iter_mut().zip(&curv) {
        *acc -= k;
    }
    Ok(quadrature(&integrand, h))
}

/// `V†(u) = G(u)/G(L) · (parallel field through v)` for `v` at the geodesic end.
pub fn dagger_field(green: &GreenSolution, model: &ManifoldModel, v: &TangentVector) -> Result<SampledField> {
    let geo = &green.geodesic;
    let t = geo.time;
    if v.base.max_abs_diff(&geo.end) > 1e-6 {
        return Err(invalid("dagger field vector is not based at the geodesic end"));
    }
    let n = green.grid.len() - 1;
    let gl = green.g[n];
    if !(gl > 0.0) {
        return Err(Error::Singular(format!("G(L) = {gl} is not positive")));
    }
    let frame = model.frame_at(t, &geo.start);
    let frames = model.parallel_frame_along(geo, &frame.vectors, n);
    let coeffs: Vec<f64> = frames[n].iter().map(|e| model.inner(t, e, v)).collect();
    let values = frames
        .iter()
        .zip(&green.g)
        .map(|(es, g)| {
            let mut out = TangentVector::zero(&es[0].base);
            for (c, e) in coeffs.iter().zip(es) {
                out = out.add_scaled(c * g / gl, e);
            }
            out
        })
        .collect();
    Ok(SampledField {
        grid: green.grid.clone(),
        values,
    })
}

/// `∂_t d_{g(t)}(x, y) = ½ ∫₀^d ∂_t g(t)(γ̇, γ̇) du`.
pub fn dt_distance(model: &ManifoldModel, t: f64, geo: &Geodesic) -> Result<f64> {
    check_geodesic(geo)?;
    let n = DEFAULT_GRID;
    let vals: Vec<f64> = model
        .geodesic_trace(geo, n)
        .iter()
        .map(|(_, v)| model.metric_time_derivative(t, v, v))
        .collect();
    Ok(0.5 * quadrature(&vals, geo.length / n as f64))
}

/// First- and second-order terms of the coupled distance increment.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationTerms {
    /// `λ*`, the first variation of the distance under the reflected step.
    pub lambda: f64,
    /// `Λ* = dt_distance + drift_term + index_term`.
    pub big_lambda: f64,
    pub dt_distance: f64,
    /// `∫ (∇Z)♭(γ̇, γ̇) ds`.
    pub drift_term: f64,
    /// `½ I(V)`.
    pub index_term: f64,
    /// `−(k/2) d`, the expected bound on `Λ*` under the curvature condition.
    pub drift_bound: f64,
}

/// `λ*` and `Λ*` for noise `xi1` at the start of the geodesic joining the
/// coupled pair.
///
/// `λ* = 2⟨ξ̃¹, γ̇_{X₂X₁}(d)⟩ = −2⟨ξ̃¹, γ̇(0)⟩`, so that in flat space the
/// reflected step moves the distance exactly by `αλ*`.
pub fn coupled_variation_terms(
    model: &ManifoldModel,
    t: f64,
    geo: &Geodesic,
    xi1: &TangentVector,
    k: f64,
) -> Result<VariationTerms> {
    check_geodesic(geo)?;
    if xi1.base.max_abs_diff(&geo.start) > 1e-9 {
        return Err(invalid("noise vector is not based at the geodesic start"));
    }
    let e0 = &geo.initial_velocity;
    let a = model.inner(t, xi1, e0);
    let lambda = -2.0 * a;
    let perp = xi1.add_scaled(-a, e0);

    let n = DEFAULT_GRID;
    let h = geo.length / n as f64;
    let trace = model.geodesic_trace(geo, n);
    let dt_vals: Vec<f64> = trace.iter().map(|(_, v)| model.metric_time_derivative(t, v, v)).collect();
    let dt = 0.5 * quadrature(&dt_vals, h);
    let drift = if model.has_drift() {
        let vals: Vec<f64> = trace.iter().map(|(_, v)| model.drift_covariant_form(t, v)).collect();
        quadrature(&vals, h)
    } else {
        0.0
    };
    let index = if model.norm(t, &perp) > 1e-14 {
        let values = model
            .parallel_frame_along(geo, core::slice::from_ref(&perp), n)
            .into_iter()
            .map(|mut row| row.remove(0))
            .collect();
        let field = SampledField {
            grid: uniform_grid(geo.length, n),
            values,
        };
        0.5 * index_form(model, t, geo, &field)?
    } else {
        0.0
    };
    Ok(VariationTerms {
        lambda,
        big_lambda: dt + drift + index,
        dt_distance: dt,
        drift_term: drift,
        index_term: index,
        drift_bound: -0.5 * k * geo.length,
    })
}
