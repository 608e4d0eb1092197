use super::*;
use crate::testutil::*;

fn p(c: &[f64]) -> Point {
    Point::new(c)
}

#[test]
fn schedule_shape() {
    let s = Schedule::new(0.1, 0.0, 1.0).unwrap();
    assert_eq!(s.steps(), 100);
    assert_eq!(s.times[0], 0.0);
    assert_eq!(*s.times.last().unwrap(), 1.0);
    assert!(s.times.windows(2).all(|w| w[1] > w[0]));
    assert!((s.fraction(99) - 1.0).abs() < 1e-9);

    let s = Schedule::new(0.3, 0.0, 1.0).unwrap();
    assert_eq!(s.steps(), 12);
    assert!((s.fraction(11) - (1.0 - 0.99) / 0.09).abs() < 1e-12);
    assert_eq!(s.step_index(0.0), 0);
    assert_eq!(s.step_index(0.095), 1);
    assert_eq!(s.step_index(1.0), 11);

    assert!(Schedule::new(2.0, 0.0, 1.0).is_err());
    assert!(Schedule::new(1.0, 0.0, 1.0).is_err());
    assert!(Schedule::new(0.0, 0.0, 1.0).is_err());
    assert!(Schedule::new(0.1, 1.0, 1.0).is_err());
}

#[test]
fn ball_samples_stay_in_ball() {
    let mut rng = stream(31);
    for m in 1..6 {
        for _ in 0..20_000 {
            let x = sample_unit_ball(m, &mut rng);
            assert_eq!(x.len(), m);
            assert!(x.iter().map(|c| c * c).sum::<f64>() <= 1.0 + 1e-15);
        }
    }
}

#[test]
fn ball_moments() {
    for m in [1usize, 2, 3] {
        let mut rng = stream(32 + m as u64);
        let n = 1_000_000;
        let mut mean = alloc::vec![0.0; m];
        let mut cov = alloc::vec![0.0; m * m];
        let mut cov2 = alloc::vec![0.0; m * m];
        for _ in 0..n {
            let x = sample_unit_ball(m, &mut rng);
            for i in 0..m {
                mean[i] += x[i];
                for j in 0..m {
                    let v = x[i] * x[j];
                    cov[i * m + j] += v;
                    cov2[i * m + j] += v * v;
                }
            }
        }
        let nf = n as f64;
        for i in 0..m {
            // E ξ_i² = 1/(m+2); Var ξ_i ≤ E ξ_i² bounds the standard error.
            let se = libm::sqrt(1.0 / (m as f64 + 2.0) / nf);
            assert!((mean[i] / nf).abs() < 3.0 * se + 1e-12);
            for j in 0..m {
                let e = cov[i * m + j] / nf;
                let var = cov2[i * m + j] / nf - e * e;
                let se = libm::sqrt(var / nf);
                let want = if i == j { 1.0 / (m as f64 + 2.0) } else { 0.0 };
                assert!((e - want).abs() < 3.0 * se, "m={m} ({i},{j}) {e} vs {want}");
            }
        }
    }
}

#[test]
fn ball_draw_count_is_fixed() {
    for m in 1..6 {
        let mut a = stream(40);
        let mut b = stream(40);
        sample_unit_ball(m, &mut a);
        for _ in 0..crate::rng::ball_draws(m) {
            b.uniform();
        }
        assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
    }
}

#[test]
fn step_examples() {
    let flat = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let x = p(&[0.3, -0.4]);
    let (y, noise) = step(&flat, 0.0, &x, &[0.0, 0.0], 0.1, false).unwrap();
    assert_eq!(y, x);
    assert!(noise.xi_tilde.components.iter().all(|c| *c == 0.0));

    let line = ManifoldModel::euclidean(1, 0.0, 1.0).unwrap();
    let (y, noise) = step(&line, 0.0, &p(&[2.0]), &[0.5], 0.1, false).unwrap();
    assert!((y.coords[0] - (2.0 + 0.1 * libm::sqrt(3.0) * 0.5)).abs() < 1e-15);
    assert!((y.coords[0] - 2.0866025).abs() < 1e-7);
    assert!((line.norm(0.0, &noise.xi_tilde) - libm::sqrt(3.0) * 0.5).abs() < 1e-9);

    let sphere = ManifoldModel::round_sphere(2, 1.0, false, 0.0, 1.0).unwrap();
    let mut rng = stream(41);
    let mut x = sphere.origin();
    for _ in 0..1000 {
        let xi = sample_unit_ball(2, &mut rng);
        let (y, noise) = step(&sphere, 0.2, &x, &xi, 0.3, false).unwrap();
        assert!(sphere.constraint_residual(&y) < 1e-9);
        let nxi = libm::sqrt(xi.iter().map(|c| c * c).sum::<f64>());
        assert!((sphere.norm(0.2, &noise.xi_tilde) - 2.0 * nxi).abs() < 1e-9);
        x = y;
    }
}

#[test]
fn step_with_drift_adds_alpha_squared_z() {
    let m = ManifoldModel::euclidean(2, 0.0, 1.0)
        .unwrap()
        .with_drift(alloc::sync::Arc::new(|_t, x: &[f64]| Coords::from_slice(&[-x[0], 1.0])));
    let x = p(&[1.0, 0.0]);
    let (y, _) = step(&m, 0.0, &x, &[0.0, 0.0], 0.1, true).unwrap();
    assert!((y.coords[0] - 0.99).abs() < 1e-15 && (y.coords[1] - 0.01).abs() < 1e-15);
    let (y, _) = step(&m, 0.0, &x, &[0.0, 0.0], 0.1, false).unwrap();
    assert_eq!(y, x);
}

#[test]
fn run_walk_shape_and_determinism() {
    let mut rng = stream(42);
    for model in closed_models().iter().chain(chart_models().iter()) {
        let start = random_point(model, &mut rng);
        let cfg = WalkConfig::new(0.15, 0.0, 1.0, 99, start);
        let a = run_walk(model, &cfg, 3).unwrap();
        let b = run_walk(model, &cfg, 3).unwrap();
        assert_eq!(a.skeleton.len(), a.schedule.steps() + 1);
        for (x, y) in a.skeleton.iter().zip(&b.skeleton) {
            for (u, v) in x.coords.iter().zip(&y.coords) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
        let c = run_walk(model, &cfg, 4).unwrap();
        assert_ne!(a.skeleton.last(), c.skeleton.last());
        for x in &a.skeleton {
            assert!(model.constraint_residual(x) < 1e-9);
        }
    }
}

#[test]
fn replaying_noise_reproduces_skeleton() {
    let mut rng = stream(43);
    for model in closed_models() {
        let cfg = WalkConfig::new(0.2, 0.0, 1.0, 5, random_point(&model, &mut rng));
        let path = run_walk(&model, &cfg, 0).unwrap();
        for n in 0..path.schedule.steps() {
            let t = path.schedule.times[n];
            let x = &path.skeleton[n];
            let frame = model.frame_at(t, x);
            let (y, _, _) = step_with_frame(&model, t, x, &frame, &path.noise_record[n], cfg.alpha, false, path.schedule.fraction(n)).unwrap();
            assert_eq!(&y, &path.skeleton[n + 1]);
        }
    }
}

#[test]
fn euclidean_terminal_variance_is_horizon() {
    let model = ManifoldModel::euclidean(1, 0.0, 1.0).unwrap();
    let cfg = WalkConfig::new(0.1, 0.0, 1.0, 2024, p(&[0.0]));
    let n = 100_000;
    let (mut s, mut s2, mut s4) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let path = run_walk(&model, &cfg, i).unwrap();
        let x = path.skeleton.last().unwrap().coords[0];
        s += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    let nf = n as f64;
    let var = s2 / nf - (s / nf) * (s / nf);
    let se = libm::sqrt((s4 / nf - (s2 / nf) * (s2 / nf)) / nf);
    assert!((var - 1.0).abs() < 3.0 * se, "var = {var}, se = {se}");
}

#[test]
fn interpolation() {
    let flat = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let cfg = WalkConfig::new(0.1, 0.0, 1.0, 1, p(&[0.0, 0.0]));
    let path = run_walk(&flat, &cfg, 0).unwrap();
    for (n, t) in path.schedule.times.iter().enumerate() {
        assert!(interpolate(&flat, &path, *t).unwrap().max_abs_diff(&path.skeleton[n]) < 1e-14);
    }
    let t = 0.5 * (path.schedule.times[7] + path.schedule.times[8]);
    let mid = interpolate(&flat, &path, t).unwrap();
    for i in 0..2 {
        let want = 0.5 * (path.skeleton[7].coords[i] + path.skeleton[8].coords[i]);
        assert!((mid.coords[i] - want).abs() < 1e-14);
    }

    let sphere = ManifoldModel::round_sphere(2, 1.0, true, 0.0, 1.0).unwrap();
    let cfg = WalkConfig::new(0.3, 0.0, 1.0, 1, sphere.origin());
    let path = run_walk(&sphere, &cfg, 0).unwrap();
    for i in 0..=200 {
        let x = interpolate(&sphere, &path, i as f64 / 200.0).unwrap();
        assert!(sphere.constraint_residual(&x) < 1e-9);
    }
    assert!(interpolate(&sphere, &path, 1.5).is_err());
    let last = interpolate(&sphere, &path, 1.0).unwrap();
    assert!(last.max_abs_diff(path.skeleton.last().unwrap()) < 1e-12);
}

#[test]
fn exit_time_cases() {
    let flat = ManifoldModel::euclidean(1, 0.0, 1.0).unwrap();
    let o = flat.origin();
    let cfg = WalkConfig::new(0.1, 0.0, 1.0, 3, o.clone());
    let path = run_walk(&flat, &cfg, 0).unwrap();
    assert_eq!(exit_time(&path, &flat, &o, 1000.0).unwrap(), None);
    assert!(exit_time(&path, &flat, &o, 1.0).is_err());

    // Constant drift carries a noiseless path through the shell d = R − 1 = 2.
    let drifting = ManifoldModel::new(1, 0.0, 1.0, crate::ModelKind::Euclidean)
        .unwrap()
        .with_drift(alloc::sync::Arc::new(|_t, _x: &[f64]| Coords::from_slice(&[5.0])));
    let mut path = path.clone();
    for n in 0..=path.schedule.steps() {
        path.skeleton[n] = p(&[5.0 * path.schedule.times[n]]);
    }
    let hit = exit_time(&path, &drifting, &o, 3.0).unwrap().unwrap();
    let want = *path.schedule.times.iter().find(|t| 5.0 * **t > 2.0).unwrap();
    assert_eq!(hit, want);
    assert!((hit - 0.405).abs() < 0.006);

    let chart = &chart_models()[0];
    let cfg = WalkConfig::new(0.3, 0.0, 1.0, 3, chart.origin());
    let path = run_walk(chart, &cfg, 0).unwrap();
    assert!(matches!(exit_time(&path, chart, &chart.origin(), 3.0), Err(Error::Unsupported { .. })));
}

#[test]
fn exit_probability_decreases_with_radius() {
    let flat = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    let o = flat.origin();
    let cfg = WalkConfig::new(0.1, 0.0, 1.0, 8, o.clone());
    let paths: Vec<WalkPath> = (0..4000).map(|i| run_walk(&flat, &cfg, i).unwrap()).collect();
    let frac = |r: f64| {
        paths
            .iter()
            .filter(|w| exit_time(w, &flat, &o, r).unwrap().is_some())
            .count()
    };
    let (a, b, c) = (frac(3.0), frac(5.0), frac(8.0));
    assert!(a >= b && b >= c, "{a} {b} {c}");
    assert!(a > 0);
}

#[test]
fn subordination() {
    let flat = ManifoldModel::euclidean(1, 0.0, 1.0).unwrap();
    let cfg = WalkConfig::new(0.2, 0.0, 1.0, 17, flat.origin());
    let lambda = 25.0;
    let n = 10_000;
    let mut total = 0.0;
    for i in 0..n {
        let sp = subordinated_walk(&flat, &cfg, i).unwrap();
        let j = sp.jumps_by(1.0);
        total += j as f64;
        assert!(sp.index_at(1.0) <= sp.walk.schedule.steps());
        assert!(sp.index_at(1.0) == j.min(25));
        if i < 20 {
            // Constant between consecutive jumps.
            for w in sp.jump_times.windows(2) {
                let a = sp.point_at(w[0]);
                let b = sp.point_at(0.5 * (w[0] + w[1]));
                assert_eq!(a, b);
            }
            assert_eq!(sp.point_at(0.0), &sp.walk.skeleton[0]);
        }
    }
    let mean = total / n as f64;
    let se = libm::sqrt(lambda / n as f64);
    assert!((mean - lambda).abs() < 3.0 * se, "{mean}");
}

#[test]
fn walk_config_validation() {
    let flat = ManifoldModel::euclidean(2, 0.0, 1.0).unwrap();
    assert!(WalkConfig::new(0.1, 0.0, 2.0, 1, flat.origin()).validate(&flat).is_err());
    assert!(WalkConfig::new(0.1, 0.0, 1.0, 1, p(&[0.0])).validate(&flat).is_err());
    let sphere = ManifoldModel::round_sphere(2, 1.0, false, 0.0, 1.0).unwrap();
    assert!(WalkConfig::new(0.1, 0.0, 1.0, 1, p(&[0.0, 0.0, 2.0])).validate(&sphere).is_err());
    let mut cfg = WalkConfig::new(0.1, 0.0, 1.0, 1, flat.origin());
    cfg.exit_radius = Some(0.5);
    assert!(cfg.validate(&flat).is_err());
}
