//! Dispatch from a resolved [`Experiment`] to the core routines.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use gtwalk_core::comparison::{
    feller_explosion_test_with_step, ou_survival_probability, FellerVerdict, OUParams, RadialComparisonSpec,
};
use gtwalk_core::coupling::{coupling_probability_bound, run_coupled, CouplingConfig, CouplingKind};
use gtwalk_core::exec::PathExecutor;
use gtwalk_core::stats::{
    chain_domination_fraction, check_contraction, check_gradient_estimate, circle_angle, convergence_diagnostic,
    estimate_coupling_survival, normal_cdf, proportion, radial_domination_fraction, wrapped_gaussian_cdf, McEstimate,
    ReferenceLaw,
};
use gtwalk_core::walk::{exit_time, run_walk, WalkConfig};
use gtwalk_core::{ManifoldModel, Point};
use serde::Serialize;

use crate::config::{
    normal_variance, CoupleSpec, CouplingChoice, DominationProcess, Expectation, Experiment, RadialSpec,
    ReferenceLawChoice, Spec, SummaryChoice, WalkSpec,
};
use crate::error::RunError;
use crate::report::Report;

impl WalkSpec {
    pub fn build(&self, seed: u64) -> gtwalk_core::Result<(ManifoldModel, WalkConfig)> {
        let model = self.manifold.build(self.t1, self.t2)?;
        let mut cfg = WalkConfig::new(self.alpha, self.t1, self.t2, seed, Point::new(&self.start));
        cfg.reference = Some(Point::new(&self.reference));
        cfg.exit_radius = Some(self.exit_radius);
        Ok((model, cfg))
    }

    fn params(&self, r: &mut Report) {
        r.param("alpha", self.alpha)
            .param("t1", self.t1)
            .param("t2", self.t2)
            .param("exit_radius", self.exit_radius);
    }
}

impl CoupleSpec {
    pub fn build(&self, seed: u64) -> gtwalk_core::Result<(ManifoldModel, CouplingConfig)> {
        let model = self.manifold.build(self.t1, self.t2)?;
        let kind = match self.coupling {
            CouplingChoice::Reflection => CouplingKind::Reflection,
            CouplingChoice::ParallelTransport => CouplingKind::ParallelTransport,
        };
        let mut cfg = CouplingConfig::new(
            self.alpha,
            self.t1,
            self.t2,
            seed,
            Point::new(&self.start),
            Point::new(&self.start2),
            kind,
        );
        cfg.delta_couple = self.delta_couple;
        cfg.k = self.k;
        cfg.stick_after_coupling = self.stick;
        Ok((model, cfg))
    }
}

impl RadialSpec {
    pub fn build(&self) -> gtwalk_core::Result<RadialComparisonSpec> {
        RadialComparisonSpec::new(self.b.0.clone(), self.c0, self.r0)
    }
}

#[derive(Serialize)]
struct Row {
    alpha: f64,
    n: usize,
    w1: f64,
    w1_stderr: f64,
    ks_statistic: Option<f64>,
    ks_threshold: Option<f64>,
    ks_pass: Option<bool>,
}

/// Runs one experiment. `runtime_ms` is left at zero for the caller to fill.
pub fn run_experiment<E: PathExecutor>(exp: &Experiment, exec: &E) -> Result<Report, RunError> {
    let core = |source| RunError::Experiment {
        id: exp.id.clone(),
        source,
    };
    let kind = exp.kind().name();
    let n_paths = exp.n_paths;
    let mut report = match &exp.spec {
        Spec::Walk { walk, .. } => {
            let (model, cfg) = walk.build(exp.seed).map_err(core)?;
            let o = cfg.reference_point(&model);
            let per_path = exec.map_paths(n_paths, |i| -> gtwalk_core::Result<(f64, bool)> {
                let p = run_walk(&model, &cfg, i as u64)?;
                let d = model.distance(cfg.t2, &o, p.skeleton.last().expect("skeleton is non-empty"))?;
                let exited = exit_time(&p, &model, &o, walk.exit_radius)?.is_some();
                Ok((d, exited))
            });
            let per_path: Vec<(f64, bool)> = per_path.into_iter().collect::<Result<_, _>>().map_err(core)?;
            let dist: Vec<f64> = per_path.iter().map(|p| p.0).collect();
            let exits = per_path.iter().filter(|p| p.1).count();
            let mut r = Report::new(&exp.id, kind, &McEstimate::from_samples(&dist).map_err(core)?, exp.seed);
            r.detail("estimate_of", "terminal distance to the reference point")
                .detail("exit_probability", estimate_json(&proportion(exits, n_paths)));
            walk.params(&mut r);
            r
        }
        Spec::Couple { couple, .. } => {
            let (model, cfg) = couple.build(exp.seed).map_err(core)?;
            cfg.validate(&model).map_err(core)?;
            let per_path = exec.map_paths(n_paths, |i| {
                run_coupled(&model, &cfg, i as u64).map(|p| (p.survived(), *p.distance.last().expect("non-empty")))
            });
            let per_path: Vec<(bool, f64)> = per_path.into_iter().collect::<Result<_, _>>().map_err(core)?;
            let alive = per_path.iter().filter(|p| p.0).count();
            let d: Vec<f64> = per_path.iter().map(|p| p.1).collect();
            let d0 = model.distance(cfg.t1, &cfg.start1, &cfg.start2).map_err(core)?;
            let mut r = Report::new(&exp.id, kind, &proportion(alive, n_paths), exp.seed);
            r.detail("estimate_of", "fraction of pairs not coupled by t2")
                .detail("final_distance", estimate_json(&McEstimate::from_samples(&d).map_err(core)?));
            if couple.coupling == CouplingChoice::Reflection {
                r.detail("coupling_bound", coupling_probability_bound(d0, cfg.k, cfg.t2 - cfg.t1));
            }
            r.param("alpha", cfg.alpha)
                .param("delta_couple", cfg.delta_couple)
                .param("k", cfg.k)
                .param("d0", d0)
                .param("t1", cfg.t1)
                .param("t2", cfg.t2);
            r
        }
        Spec::VerifyCouplingBound { couple } => {
            let (model, cfg) = couple.build(exp.seed).map_err(core)?;
            let v = estimate_coupling_survival(&model, &cfg, n_paths, exec).map_err(core)?;
            Report::from_verification(&exp.id, kind, &v)
        }
        Spec::VerifyContraction { couple, contraction_c } => {
            let (model, cfg) = couple.build(exp.seed).map_err(core)?;
            let v = check_contraction(&model, &cfg, n_paths, *contraction_c, exec).map_err(core)?;
            Report::from_verification(&exp.id, kind, &v)
        }
        Spec::VerifyGradient { couple, test_function } => {
            let (model, cfg) = couple.build(exp.seed).map_err(core)?;
            let f = |x: &Point| test_function.eval(x);
            let v = check_gradient_estimate(&model, &cfg, f, test_function.oscillation(), n_paths, exec)
                .map_err(core)?;
            let mut r = Report::from_verification(&exp.id, kind, &v);
            if let Some(var) = normal_variance(&couple.manifold, cfg.t2 - cfg.t1) {
                let crate::config::TestFunction::HalfSpace { axis, offset } = test_function;
                let sd = var.sqrt();
                let exact =
                    (normal_cdf((couple.start[*axis] - offset) / sd) - normal_cdf((couple.start2[*axis] - offset) / sd))
                        .abs();
                let close = (v.estimate.mean - exact).abs() <= 3.0 * v.estimate.stderr;
                r.pass = r.pass && exact <= v.bound && close;
                r.detail("exact", exact).detail("exact_within_3se", close);
            }
            r
        }
        Spec::Convergence {
            manifold,
            t1,
            t2,
            alphas,
            start,
            summary,
            component,
            reference_law,
            ks_level,
        } => {
            let model = manifold.build(*t1, *t2).map_err(core)?;
            let x0 = Point::new(start);
            let cfg = WalkConfig::new(alphas[0], *t1, *t2, exp.seed, x0.clone());
            let horizon = t2 - t1;
            let theta0 = if *summary == SummaryChoice::Angle { circle_angle(&x0) } else { 0.0 };
            let c = *component;
            let summarize = |x: &Point| match summary {
                SummaryChoice::Coordinate => x.coords[c] - start[c],
                SummaryChoice::Angle => wrap_angle(circle_angle(x) - theta0),
            };
            let (var, c0) = match manifold {
                crate::descriptor::ManifoldDescriptor::Sphere { radius_c0, .. } => (horizon / radius_c0, *radius_c0),
                m => (normal_variance(m, horizon).unwrap_or(f64::NAN), 1.0),
            };
            let normal = move |x: f64| normal_cdf(x / var.sqrt());
            let wrapped = move |x: f64| wrapped_gaussian_cdf(x, var);
            let law = match reference_law {
                ReferenceLawChoice::Normal => Some(ReferenceLaw {
                    cdf: &normal,
                    lo: -10.0 * var.sqrt(),
                    hi: 10.0 * var.sqrt(),
                }),
                ReferenceLawChoice::WrappedGaussian => Some(ReferenceLaw {
                    cdf: &wrapped,
                    lo: -PI,
                    hi: PI,
                }),
                ReferenceLawChoice::None => None,
            };
            let table = convergence_diagnostic(&model, &cfg, alphas, n_paths, summarize, law.as_ref(), *ks_level, exec)
                .map_err(core)?;
            let last = table.rows.last().expect("at least one alpha");
            let est = McEstimate {
                n: last.n,
                mean: last.w1,
                stderr: last.w1_stderr,
                ci95: (last.w1 - 1.96 * last.w1_stderr, last.w1 + 1.96 * last.w1_stderr),
            };
            let mut r = Report::new(&exp.id, kind, &est, exp.seed);
            r.pass = table.trend_ok && last.ks.is_none_or(|k| k.pass);
            let rows: Vec<Row> = table
                .rows
                .iter()
                .map(|row| Row {
                    alpha: row.alpha,
                    n: row.n,
                    w1: row.w1,
                    w1_stderr: row.w1_stderr,
                    ks_statistic: row.ks.map(|k| k.statistic),
                    ks_threshold: row.ks.map(|k| k.threshold),
                    ks_pass: row.ks.map(|k| k.pass),
                })
                .collect();
            r.detail("estimate_of", "W1 distance of the terminal law at the smallest alpha")
                .detail("rows", rows)
                .detail("trend_ok", table.trend_ok);
            if law.is_some() {
                r.param("reference_variance", var);
            }
            if *summary == SummaryChoice::Angle {
                r.param("radius_c0", c0);
            }
            for (i, a) in alphas.iter().enumerate() {
                r.param(&format!("alpha_{i}"), *a);
            }
            r.param("t1", *t1).param("t2", *t2).param("ks_level", *ks_level);
            r
        }
        Spec::FellerTest {
            comparison,
            feller_c,
            y_max,
            h,
            expect,
        } => {
            let spec = comparison.build().map_err(core)?;
            let res = feller_explosion_test_with_step(&spec, *feller_c, *y_max, *h).map_err(core)?;
            let doubled = feller_explosion_test_with_step(&spec, *feller_c, 2.0 * y_max, *h).map_err(core)?;
            let mut r = Report::new(&exp.id, kind, &McEstimate::exact(1, res.tail_exponent), exp.seed);
            let decided = res.stable && res.verdict != FellerVerdict::Inconclusive;
            r.pass = decided
                && match expect {
                    None => true,
                    Some(Expectation::Survives) => res.verdict == FellerVerdict::Survives,
                    Some(Expectation::Explodes) => res.verdict == FellerVerdict::Explodes,
                };
            r.detail("estimate_of", "tail exponent p of the inner Feller function")
                .detail("verdict", verdict_name(res.verdict))
                .detail("verdict_double_y_max", verdict_name(doubled.verdict))
                .detail("integral", res.integral)
                .detail("richardson", res.richardson)
                .detail("stable", res.stable);
            if let Some(e) = expect {
                r.detail("expect", e);
            }
            r.param("feller_c", *feller_c)
                .param("y_max", *y_max)
                .param("h", *h)
                .param("c0", comparison.c0)
                .param("r0", comparison.r0);
            r
        }
        Spec::OuSurvival { a, k, t1, t2, h } => {
            let params = OUParams::new(*a, *k, *t1).map_err(core)?;
            let s = ou_survival_probability(&params, t2 - t1, n_paths, *h, exp.seed, exec).map_err(core)?;
            let mut r = Report::new(&exp.id, kind, &s.estimate, exp.seed);
            r.bound = Some(s.analytic);
            r.bias_terms.insert("discretization".into(), s.discretization_bias);
            r.pass = (s.estimate.mean - s.analytic).abs() <= 3.0 * s.estimate.stderr + s.discretization_bias;
            r.detail("estimate_of", "fraction of OU paths positive on the grid")
                .detail("two_sided", true);
            r.param("a", *a)
                .param("k", *k)
                .param("t1", *t1)
                .param("t2", *t2)
                .param("h", *h)
                .param("n_paths", n_paths as f64);
            r
        }
        Spec::RadialDomination {
            process,
            margin,
            max_violation_fraction,
        } => {
            let res = match process {
                DominationProcess::Radial { walk, comparison } => {
                    let (model, cfg) = walk.build(exp.seed).map_err(core)?;
                    let spec = comparison.build().map_err(core)?;
                    radial_domination_fraction(&model, &cfg, &spec, *margin, walk.exit_radius, n_paths, exec)
                        .map_err(core)?
                }
                DominationProcess::Chain {
                    couple,
                    reference,
                    exit_radius,
                } => {
                    let (model, cfg) = couple.build(exp.seed).map_err(core)?;
                    cfg.validate(&model).map_err(core)?;
                    let o = Point::new(reference);
                    chain_domination_fraction(&model, &cfg, &o, *margin, *exit_radius, n_paths, exec).map_err(core)?
                }
            };
            let mut r = Report::new(&exp.id, kind, &res.violations, exp.seed);
            r.bound = Some(*max_violation_fraction);
            r.pass = res.violations.mean < *max_violation_fraction;
            r.detail("estimate_of", "fraction of paths with a domination violation")
                .detail("min_comparison", res.min_comparison);
            r.param("margin", *margin).param("n_paths", n_paths as f64);
            match process {
                DominationProcess::Radial { walk, comparison } => {
                    walk.params(&mut r);
                    r.param("c0", comparison.c0).param("r0", comparison.r0);
                }
                DominationProcess::Chain { couple, .. } => {
                    r.param("alpha", couple.alpha)
                        .param("delta_couple", couple.delta_couple)
                        .param("k", couple.k);
                }
            }
            r
        }
    };
    if exp.kind() != crate::config::ExperimentKind::FellerTest {
        report.params.insert("n_paths".into(), n_paths as f64);
    }
    Ok(report)
}

fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

fn verdict_name(v: FellerVerdict) -> &'static str {
    match v {
        FellerVerdict::Explodes => "explodes",
        FellerVerdict::Survives => "survives",
        FellerVerdict::Inconclusive => "inconclusive",
    }
}

fn estimate_json(e: &McEstimate) -> crate::report::Estimate {
    e.into()
}

/// Writes the first `count` paths of a walk or coupling experiment under
/// `dir`: `path_<i>.csv` for walks, `pair_<i>.csv` for coupled pairs.
pub fn dump_paths(exp: &Experiment, dir: &Path, count: usize) -> Result<Vec<PathBuf>, RunError> {
    let core = |source| RunError::Experiment {
        id: exp.id.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let walk = match &exp.spec {
        Spec::Walk { walk, .. } => Some(walk),
        Spec::RadialDomination {
            process: DominationProcess::Radial { walk, .. },
            ..
        } => Some(walk),
        _ => None,
    };
    let couple = match &exp.spec {
        Spec::Couple { couple, .. }
        | Spec::VerifyCouplingBound { couple }
        | Spec::VerifyContraction { couple, .. }
        | Spec::VerifyGradient { couple, .. }
        | Spec::RadialDomination {
            process: DominationProcess::Chain { couple, .. },
            ..
        } => Some(couple),
        _ => None,
    };
    let mut files = Vec::with_capacity(count);
    if let Some(w) = walk {
        let (model, cfg) = w.build(exp.seed).map_err(core)?;
        for i in 0..count {
            let p = run_walk(&model, &cfg, i as u64).map_err(core)?;
            let f = dir.join(format!("path_{i:05}.csv"));
            crate::paths::write_walk(&f, &p)?;
            files.push(f);
        }
    } else if let Some(c) = couple {
        let (model, cfg) = c.build(exp.seed).map_err(core)?;
        for i in 0..count {
            let p = run_coupled(&model, &cfg, i as u64).map_err(core)?;
            let f = dir.join(format!("pair_{i:05}.csv"));
            crate::paths::write_coupled(&f, &p)?;
            files.push(f);
        }
    } else {
        return Err(RunError::Experiment {
            id: exp.id.clone(),
            source: gtwalk_core::Error::Unsupported {
                model: "this experiment kind",
                op: "path dumps",
            },
        });
    }
    Ok(files)
}
