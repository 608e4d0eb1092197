use super::*;
use crate::testutil::*;
use crate::walk::step_with_frame;

fn p(c: &[f64]) -> Point {
    Point::new(c)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn reflection_examples() {
    let m = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let x = p(&[0.0, 0.0]);
    let geo = m.minimal_geodesic(0.0, &x, &p(&[1.0, 0.0])).unwrap();
    let r = |c: &[f64]| reflection_map(&m, 0.0, &geo, &TangentVector::new(x.clone(), c)).unwrap();
    assert_eq!(&r(&[0.0, 1.0]).components[..], &[0.0, 1.0]);
    assert_eq!(&r(&[1.0, 0.0]).components[..], &[-1.0, 0.0]);
    assert_eq!(&r(&[1.0, 1.0]).components[..], &[-1.0, 1.0]);
}

#[test]
fn reflection_is_isometric_involution() {
    let mut rng = stream(51);
    for model in closed_models() {
        for _ in 0..1000 {
            let t = random_time(&mut rng);
            let x = random_point(&model, &mut rng);
            let y = random_point(&model, &mut rng);
            let geo = model.minimal_geodesic(t, &x, &y).unwrap();
            let v = random_tangent(&model, &x, &mut rng, 1.0);
            let mv = reflection_map(&model, t, &geo, &v).unwrap();
            assert!((model.norm(t, &mv) - model.norm(t, &v)).abs() < 1e-9);
            let back_geo = model.minimal_geodesic(t, &y, &x).unwrap();
            let mv = TangentVector::new(y.clone(), &mv.components);
            let back = reflection_map(&model, t, &back_geo, &mv).unwrap();
            assert!(close(&back.components, &v.components, 1e-9), "{:?}", model.kind());
            let e = reflection_map(&model, t, &geo, &geo.initial_velocity).unwrap();
            let end = model.geodesic_velocity(&geo, geo.length);
            assert!(close(&e.components, &end.scaled(-1.0).components, 1e-9));
        }
    }
}

#[test]
fn flat_reflection_step_moves_distance_by_alpha_lambda() {
    let m = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let mut rng = stream(52);
    let alpha = 0.05;
    for _ in 0..1000 {
        let x1 = p(&[rng.normal(), rng.normal()]);
        let x2 = p(&[rng.normal(), rng.normal()]);
        let xi = crate::walk::sample_unit_ball(2, &mut rng);
        let d0 = m.distance(0.0, &x1, &x2).unwrap();
        let st = coupled_step(&m, 0.0, &x1, &x2, &xi, alpha, CouplingKind::Reflection, false, 1.0, false).unwrap();
        let d1 = m.distance(0.0, &st.first, &st.second).unwrap();
        assert!((d1 - (d0 + alpha * st.lambda_star).abs()).abs() < 1e-12);
        // The difference vector changes only along the separation direction.
        let e: Vec<f64> = (0..2).map(|i| (x2.coords[i] - x1.coords[i]) / d0).collect();
        let a = st.noise.xi_tilde.components[0] * e[0] + st.noise.xi_tilde.components[1] * e[1];
        for i in 0..2 {
            let before = x2.coords[i] - x1.coords[i];
            let after = st.second.coords[i] - st.first.coords[i];
            assert!((after - (before - 2.0 * alpha * a * e[i])).abs() < 1e-12);
        }

        let st = coupled_step(&m, 0.0, &x1, &x2, &xi, alpha, CouplingKind::ParallelTransport, false, 1.0, false).unwrap();
        let d1 = m.distance(0.0, &st.first, &st.second).unwrap();
        assert!((d1 - d0).abs() < 1e-12);
    }
}

#[test]
fn diagonal_step_keeps_points_together() {
    let m = ManifoldModel::round_sphere(2, 1.0, false, 0.0, 1.0).unwrap();
    let x = m.origin();
    let st = coupled_step(&m, 0.0, &x, &x, &[0.3, -0.2], 0.1, CouplingKind::Reflection, false, 1.0, false).unwrap();
    assert_eq!(st.first, st.second);
    assert!((st.lambda_star - 2.0 * 2.0 * 0.3).abs() < 1e-15);
}

#[test]
fn marginals_replay_as_single_walks() {
    let mut rng = stream(53);
    for model in closed_models() {
        for kind in [CouplingKind::Reflection, CouplingKind::ParallelTransport] {
            let x1 = random_point(&model, &mut rng);
            let x2 = random_point(&model, &mut rng);
            let mut cfg = CouplingConfig::new(0.2, 0.0, 1.0, 9, x1, x2, kind);
            cfg.stick_after_coupling = false;
            let path = run_coupled(&model, &cfg, 0).unwrap();
            for n in 0..path.schedule.steps() {
                let t = path.schedule.times[n];
                let f = path.schedule.fraction(n);
                let x = &path.first[n];
                let frame = model.frame_at(t, x);
                let (y, _, _) = step_with_frame(&model, t, x, &frame, &path.noise_record[n], cfg.alpha, false, f).unwrap();
                assert_eq!(&y, &path.first[n + 1]);
                // Second marginal: ξ̃² is √(m+2) times an orthonormal frame at
                // X₂ applied to ξ, so the step is a valid walk step.
                let xi2 = &path.second_noise[n];
                let norm_xi: f64 = path.noise_record[n].iter().map(|c| c * c).sum::<f64>();
                let want = libm::sqrt((model.dim() as f64 + 2.0) * norm_xi);
                assert!((model.norm(t, xi2) - want).abs() < 1e-9);
                let y2 = model.exp(t, &path.second[n], &xi2.scaled(cfg.alpha * f)).unwrap();
                assert!(y2.max_abs_diff(&path.second[n + 1]) < 1e-12);
            }
        }
    }
}

#[test]
fn identical_starts_couple_immediately() {
    let m = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let x = p(&[0.2, 0.1]);
    let cfg = CouplingConfig::new(0.1, 0.0, 1.0, 3, x.clone(), x, CouplingKind::Reflection);
    let path = run_coupled(&m, &cfg, 0).unwrap();
    assert_eq!(path.coupling_time, Some(0.0));
    assert_eq!(path.first, path.second);
    assert!(path.distance.iter().all(|d| *d == 0.0));
}

#[test]
fn sticking_is_monotone() {
    let m = ManifoldModel::round_sphere(2, 1.0, false, 0.0, 1.0).unwrap();
    let x1 = m.origin();
    let x2 = m.offset_point(0.0, &x1, 0, 0.3).unwrap();
    let mut seen = 0;
    for i in 0..40 {
        let cfg = CouplingConfig::new(0.1, 0.0, 1.0, 4, x1.clone(), x2.clone(), CouplingKind::Reflection);
        let path = run_coupled(&m, &cfg, i).unwrap();
        assert!(path.distance.iter().all(|d| *d >= 0.0));
        if let Some(k) = path.coupling_index() {
            seen += 1;
            assert!(path.coupled[k..].iter().all(|c| *c));
            assert!(path.coupled[..k].iter().all(|c| !*c));
            for n in k..path.first.len() {
                assert_eq!(path.first[n], path.second[n]);
                assert_eq!(path.distance[n], 0.0);
            }
            assert!(path.distance[..k].iter().all(|d| *d > 0.0));
        }
    }
    assert!(seen > 0);
}

#[test]
fn parallel_coupling_on_scaled_flat_is_conformal() {
    let k = 1.0;
    let m = ManifoldModel::scaled(&ManifoldModel::euclidean(2, 0.0, 1.0).unwrap(), k).unwrap();
    let cfg = CouplingConfig::new(0.05, 0.0, 1.0, 6, p(&[0.0, 0.0]), p(&[0.7, -0.2]), CouplingKind::ParallelTransport);
    for i in 0..5 {
        let path = run_coupled(&m, &cfg, i).unwrap();
        let d0 = path.distance[0];
        for (t, d) in path.schedule.times.iter().zip(&path.distance) {
            assert!((d - libm::exp(-k * t / 2.0) * d0).abs() < 1e-10);
        }
    }
}

#[test]
fn coupling_config_checks() {
    let m = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let mut cfg = CouplingConfig::new(0.1, 0.0, 1.0, 1, p(&[0.0, 0.0]), p(&[1.0, 0.0]), CouplingKind::Reflection);
    cfg.delta_couple = 0.05;
    assert!(run_coupled(&m, &cfg, 0).is_err());
    let chart = &chart_models()[0];
    let cfg = CouplingConfig::new(0.1, 0.0, 1.0, 1, p(&[0.0, 0.0]), p(&[1.0, 0.0]), CouplingKind::Reflection);
    assert!(matches!(run_coupled(chart, &cfg, 0), Err(Error::Unsupported { .. })));
}

#[test]
fn bound_examples() {
    assert_eq!(coupling_probability_bound(0.0, 0.0, 1.0), 0.0);
    assert!((coupling_probability_bound(1.0, 0.0, 1.0) - 0.3829249225480262).abs() < 1e-12);
    let ln2 = core::f64::consts::LN_2;
    let b = coupling_probability_bound(1.0, ln2, 1.0);
    let arg = 1.0 / (2.0 * libm::sqrt(1.0 / ln2));
    assert!((arg - 0.41628).abs() < 1e-5);
    assert!((b - 0.32279).abs() < 1e-5);
    assert_eq!(coupling_probability_bound(1.0, 0.0, 0.0), 1.0);
    // Decreasing in the horizon.
    assert!(coupling_probability_bound(1.0, 0.0, 4.0) < coupling_probability_bound(1.0, 0.0, 0.25));
}

#[test]
fn dominating_process_flat_recursion() {
    let m = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let cfg = CouplingConfig::new(0.05, 0.0, 1.0, 12, p(&[0.0, 0.0]), p(&[1.0, 0.0]), CouplingKind::Reflection);
    for i in 0..20 {
        let path = run_coupled(&m, &cfg, i).unwrap();
        let u = dominating_process(&path, 0.0);
        let mut sum = path.distance[0];
        for n in 0..path.lambda_star.len() {
            sum += cfg.alpha * path.schedule.fraction(n) * path.lambda_star[n];
            assert!((u[n + 1] - sum).abs() < 1e-12);
        }
        let stop = path.coupling_index().unwrap_or(path.distance.len());
        for n in 0..stop {
            assert!((path.distance[n] - u[n]).abs() < 1e-10);
            if n + 1 < stop {
                let next = (path.distance[n] + cfg.alpha * path.lambda_star[n]).abs();
                assert!((path.distance[n + 1] - next).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn dominating_process_with_decay() {
    let m = ManifoldModel::scaled(&ManifoldModel::euclidean(2, 0.0, 1.0).unwrap(), 1.0).unwrap();
    let cfg = CouplingConfig::new(0.1, 0.0, 1.0, 12, p(&[0.0, 0.0]), p(&[1.0, 0.0]), CouplingKind::Reflection);
    let path = run_coupled(&m, &cfg, 0).unwrap();
    let k = 0.7;
    let u = dominating_process(&path, k);
    let s = &path.schedule;
    for n in 0..path.lambda_star.len() {
        let mut acc = path.distance[0];
        for j in 0..=n {
            acc += s.alpha * s.fraction(j) * libm::exp(k * s.times[j] / 2.0) * path.lambda_star[j];
        }
        assert!((u[n + 1] - libm::exp(-k * s.times[n + 1] / 2.0) * acc).abs() < 1e-12);
    }
}
