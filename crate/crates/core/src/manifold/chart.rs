//! Numeric single-chart manifolds: a user metric `G(t, x)` on `ℝ^m`.
//!
//! Christoffel symbols come from central differences of `G` (step `1e−5`),
//! curvature from central differences of the Christoffel symbols, and
//! geodesics and parallel transport from fixed-step RK4.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{invert, quad_form};

/// `G(t, x)` as a row-major `m × m` symmetric positive definite matrix.
pub type MetricFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

const METRIC_EPS: f64 = 1e-5;
const CHRISTOFFEL_EPS: f64 = 1e-3;
const MAX_ARC_STEP: f64 = 0.05;
const MIN_STEPS: usize = 20;

#[derive(Clone)]
pub struct NumericChart {
    name: String,
    dim: usize,
    metric: MetricFn,
}

impl fmt::Debug for NumericChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericChart")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

pub(crate) struct TraceSample {
    pub point: Vec<f64>,
    /// Derivative with respect to the integration parameter `τ ∈ [0, 1]`.
    pub velocity: Vec<f64>,
    pub transported: Vec<Vec<f64>>,
}

impl NumericChart {
    pub fn new(name: impl Into<String>, dim: usize, metric: MetricFn) -> Self {
        Self {
            name: name.into(),
            dim,
            metric,
        }
    }

    /// The identity metric, solved numerically.
    pub fn flat(dim: usize) -> Self {
        Self::new(
            "flat",
            dim,
            Arc::new(move |_t, _x| {
                let mut g = vec![0.0; dim * dim];
                for i in 0..dim {
                    g[i * dim + i] = 1.0;
                }
                g
            }),
        )
    }

    /// Round sphere of curvature `1/c` in stereographic coordinates,
    /// `G = 4c / (1 + |x|²)² · I`. The chart origin is the north pole.
    pub fn stereographic_sphere(dim: usize, c: f64) -> Self {
        Self::new(
            "stereographic-sphere",
            dim,
            Arc::new(move |_t, x| {
                let r2: f64 = x.iter().map(|a| a * a).sum();
                let f = 4.0 * c / ((1.0 + r2) * (1.0 + r2));
                let mut g = vec![0.0; dim * dim];
                for i in 0..dim {
                    g[i * dim + i] = f;
                }
                g
            }),
        )
    }

    /// Stereographic round sphere whose `c(t) = c₀ + (m−1)(t − t₁)` follows the
    /// backward Ricci flow.
    pub fn stereographic_flow_sphere(dim: usize, c0: f64, t1: f64) -> Self {
        Self::new(
            "stereographic-flow-sphere",
            dim,
            Arc::new(move |t, x| {
                let c = c0 + (dim as f64 - 1.0) * (t - t1);
                let r2: f64 = x.iter().map(|a| a * a).sum();
                let f = 4.0 * c / ((1.0 + r2) * (1.0 + r2));
                let mut g = vec![0.0; dim * dim];
                for i in 0..dim {
                    g[i * dim + i] = f;
                }
                g
            }),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self, t: f64, x: &[f64]) -> Vec<f64> {
        (self.metric)(t, x)
    }

    pub fn inner(&self, t: f64, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        quad_form(&self.metric(t, x), u, v)
    }

    /// `Γ^k_{ij}` stored at `k·m² + i·m + j`.
    pub fn christoffel(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let g = self.metric(t, x);
        let ginv = invert(&g, m).expect("chart metric must be invertible");
        // dg[l][i][j] = ∂_l g_ij
        let mut dg = vec![0.0; m * m * m];
        let mut xp = x.to_vec();
        for l in 0..m {
            xp[l] = x[l] + METRIC_EPS;
            let gp = self.metric(t, &xp);
            xp[l] = x[l] - METRIC_EPS;
            let gm = self.metric(t, &xp);
            xp[l] = x[l];
            for ij in 0..m * m {
                dg[l * m * m + ij] = (gp[ij] - gm[ij]) / (2.0 * METRIC_EPS);
            }
        }
        let mut gamma = vec![0.0; m * m * m];
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    let mut s = 0.0;
                    for l in 0..m {
                        let term = dg[i * m * m + j * m + l] + dg[j * m * m + i * m + l]
                            - dg[l * m * m + i * m + j];
                        s += ginv[k * m + l] * term;
                    }
                    gamma[k * m * m + i * m + j] = 0.5 * s;
                }
            }
        }
        gamma
    }

    /// `Γ^k_{ij} u^i w^j`.
    pub fn connection_apply(&self, t: f64, x: &[f64], u: &[f64], w: &[f64]) -> Vec<f64> {
        let gamma = self.christoffel(t, x);
        contract(&gamma, u, w, self.dim)
    }

    /// `R^l_{ijk}` stored at `l·m³ + i·m² + j·m + k`, with
    /// `R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{ip}Γ^p_{jk} − Γ^l_{jp}Γ^p_{ik}`.
    pub fn riemann(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let m2 = m * m;
        let m3 = m2 * m;
        let gamma = self.christoffel(t, x);
        let mut dgamma = vec![0.0; m * m3]; // [i][l][j][k] = ∂_i Γ^l_{jk}
        let mut xp = x.to_vec();
        for i in 0..m {
            xp[i] = x[i] + CHRISTOFFEL_EPS;
            let gp = self.christoffel(t, &xp);
            xp[i] = x[i] - CHRISTOFFEL_EPS;
            let gm = self.christoffel(t, &xp);
            xp[i] = x[i];
            for idx in 0..m3 {
                dgamma[i * m3 + idx] = (gp[idx] - gm[idx]) / (2.0 * CHRISTOFFEL_EPS);
            }
        }
        let mut r = vec![0.0; m * m3];
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let mut s = dgamma[i * m3 + l * m2 + j * m + k]
                            - dgamma[j * m3 + l * m2 + i * m + k];
                        for p in 0..m {
                            s += gamma[l * m2 + i * m + p] * gamma[p * m2 + j * m + k]
                                - gamma[l * m2 + j * m + p] * gamma[p * m2 + i * m + k];
                        }
                        r[l * m3 + i * m2 + j * m + k] = s;
                    }
                }
            }
        }
        r
    }

    pub fn curvature_apply(&self, t: f64, x: &[f64], u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let r = self.riemann(t, x);
        let (m2, m3) = (m * m, m * m * m);
        (0..m)
            .map(|l| {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            s += r[l * m3 + i * m2 + j * m + k] * u[i] * v[j] * w[k];
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// `Ric_{jk} = R^i_{ijk}`.
    pub fn ricci(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let r = self.riemann(t, x);
        let (m2, m3) = (m * m, m * m * m);
        let mut ric = vec![0.0; m2];
        for j in 0..m {
            for k in 0..m {
                ric[j * m + k] = (0..m).map(|i| r[i * m3 + i * m2 + j * m + k]).sum();
            }
        }
        ric
    }

    fn steps_for(&self, t: f64, x: &[f64], v: &[f64]) -> usize {
        let len = libm::sqrt(self.inner(t, x, v, v).max(0.0));
        MIN_STEPS.max(libm::ceil(len / MAX_ARC_STEP) as usize)
    }

    pub fn exp(&self, t: f64, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.exp_with_velocity(t, x, v).0
    }

    /// End point and `τ`-velocity at `τ = 1` of `τ ↦ exp_x(τ v)`.
    pub fn exp_with_velocity(&self, t: f64, x: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let last = self
            .trace(t, x, v, 1, &[])
            .pop()
            .expect("trace returns at least one sample");
        (last.point, last.velocity)
    }

    /// Samples of `τ ↦ exp_x(τ v)` at `τ_i = i/n`, transporting `vectors`
    /// along the way.
    pub(crate) fn trace(
        &self,
        t: f64,
        x: &[f64],
        v: &[f64],
        n: usize,
        vectors: &[Vec<f64>],
    ) -> Vec<TraceSample> {
        let m = self.dim;
        let total = self.steps_for(t, x, v);
        let sub = total.div_ceil(n).max(1);
        let h = 1.0 / (n * sub) as f64;
        let mut y: Vec<f64> = Vec::with_capacity(m * (2 + vectors.len()));
        y.extend_from_slice(x);
        y.extend_from_slice(v);
        for w in vectors {
            y.extend_from_slice(w);
        }
        let split = |y: &[f64]| TraceSample {
            point: y[..m].to_vec(),
            velocity: y[m..2 * m].to_vec(),
            transported: y[2 * m..].chunks(m).map(|c| c.to_vec()).collect(),
        };
        let mut out = Vec::with_capacity(n + 1);
        out.push(split(&y));
        for _ in 0..n {
            for _ in 0..sub {
                y = self.rk4_step(t, &y, h);
            }
            out.push(split(&y));
        }
        out
    }

    fn rhs(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let x = &y[..m];
        let p = &y[m..2 * m];
        let gamma = self.christoffel(t, x);
        let mut dy = vec![0.0; y.len()];
        dy[..m].copy_from_slice(p);
        let acc = contract(&gamma, p, p, m);
        for k in 0..m {
            dy[m + k] = -acc[k];
        }
        let mut off = 2 * m;
        while off < y.len() {
            let w = &y[off..off + m];
            let d = contract(&gamma, p, w, m);
            for k in 0..m {
                dy[off + k] = -d[k];
            }
            off += m;
        }
        dy
    }

    fn rk4_step(&self, t: f64, y: &[f64], h: f64) -> Vec<f64> {
        let add = |a: &[f64], b: &[f64], f: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(p, q)| p + f * q).collect()
        };
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t, &add(y, &k1, 0.5 * h));
        let k3 = self.rhs(t, &add(y, &k2, 0.5 * h));
        let k4 = self.rhs(t, &add(y, &k3, h));
        (0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }
}

/// `out^k = Γ^k_{ij} u^i w^j`.
fn contract(gamma: &[f64], u: &[f64], w: &[f64], m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += gamma[k * m * m + i * m + j] * u[i] * w[j];
                }
            }
            s
        })
        .collect()
}
