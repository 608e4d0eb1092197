//! Shared fixtures for unit tests.

use alloc::vec::Vec;

use crate::manifold::{Coords, ManifoldModel, NumericChart, Point, TangentVector};
use crate::rng::{Lane, NoiseStream, StreamKey};

pub fn stream(seed: u64) -> NoiseStream {
    NoiseStream::sequential(StreamKey::new(seed, 0, Lane::Walk))
}

/// Closed-form models used across property tests, all on `[0, 1]`.
pub fn closed_models() -> Vec<ManifoldModel> {
    let flat = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let sphere = ManifoldModel::round_sphere(2, 1.0, false, 0.0, 1.0).unwrap();
    let flow = ManifoldModel::round_sphere(2, 1.0, true, 0.0, 1.0).unwrap();
    let hyp = ManifoldModel::hyperbolic(2, 0.0, 1.0).unwrap();
    let scaled = ManifoldModel::scaled(&flat, 1.0).unwrap();
    let scaled_sphere = ManifoldModel::scaled(&flow, -0.5).unwrap();
    let flat3 = ManifoldModel::euclidean(3, 0.0, 1.0).unwrap();
    let sphere3 = ManifoldModel::round_sphere(3, 2.0, true, 0.0, 1.0).unwrap();
    alloc::vec![flat, sphere, flow, hyp, scaled, scaled_sphere, flat3, sphere3]
}

pub fn chart_models() -> Vec<ManifoldModel> {
    alloc::vec![
        ManifoldModel::numeric_chart(NumericChart::flat(2), 0.0, 1.0).unwrap(),
        ManifoldModel::numeric_chart(NumericChart::stereographic_sphere(2, 1.0), 0.0, 1.0).unwrap(),
    ]
}

pub fn random_point(model: &ManifoldModel, rng: &mut NoiseStream) -> Point {
    let n = model.ambient_dim();
    let c: Coords = (0..n).map(|_| rng.normal()).collect();
    if model.ambient_dim() == model.dim() + 1 {
        model.project_point(&c)
    } else {
        Point { coords: c }
    }
}

pub fn random_tangent(model: &ManifoldModel, x: &Point, rng: &mut NoiseStream, scale: f64) -> TangentVector {
    let n = model.ambient_dim();
    let c: Coords = (0..n).map(|_| scale * rng.normal()).collect();
    model.project_tangent(x, &c)
}

pub fn random_time(rng: &mut NoiseStream) -> f64 {
    rng.uniform()
}
