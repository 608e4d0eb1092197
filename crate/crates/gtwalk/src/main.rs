use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gtwalk::config::{CouplingChoice, ExperimentKind, RawExperiment};
use gtwalk::descriptor::{ManifoldDescriptor, KINDS};
use gtwalk::{exec, experiment, parse_config, presets, run_suite, Overrides, RayonExecutor, RunError, Suite};

/// Geodesic random walks and couplings on manifolds with time-dependent
/// metrics.
#[derive(Parser)]
#[command(name = "gtwalk", version)]
struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, env = "GTWALK_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Manifold descriptor, e.g. `sphere(2)` or `scaled(euclidean(2), 1.0)`.
    #[arg(long)]
    manifold: Option<String>,
    /// Output directory (default: the config's `out`, else `gtwalk-out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CouplingArg {
    Reflection,
    ParallelTransport,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every experiment of a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate walks and report the terminal distance and exit probability.
    Walk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        t1: f64,
        #[arg(long, default_value_t = 1.0)]
        t2: f64,
        #[arg(long)]
        exit_radius: Option<f64>,
        /// Write the first N paths as CSV.
        #[arg(long, default_value_t = 0)]
        dump: usize,
    },
    /// Simulate coupled walks started at distance `d0`.
    Couple {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        t1: f64,
        #[arg(long, default_value_t = 1.0)]
        t2: f64,
        #[arg(long, default_value_t = 1.0)]
        d0: f64,
        #[arg(long, value_enum, default_value_t = CouplingArg::Reflection)]
        coupling: CouplingArg,
        #[arg(long)]
        delta_couple: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        /// Write the first N pairs as CSV.
        #[arg(long, default_value_t = 0)]
        dump: usize,
    },
    /// Run a built-in reference experiment (`all` runs every one).
    Verify {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// List manifold descriptors, experiment kinds and verify presets.
    ListModels,
    /// Write the first paths of every walk or coupling experiment of a config.
    DumpPaths {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print CSV columns as whitespace-separated text for gnuplot.
    Columns {
        file: PathBuf,
        /// Comma-separated column names (default: all).
        #[arg(long, value_delimiter = ',')]
        cols: Vec<String>,
    },
}

impl Common {
    fn overrides(&self) -> Result<Overrides, RunError> {
        let manifold = match &self.manifold {
            Some(s) => Some(s.parse::<ManifoldDescriptor>().map_err(|m| {
                RunError::Config(gtwalk::config::ConfigError {
                    path: "--manifold".into(),
                    message: m,
                })
            })?),
            None => None,
        };
        Ok(Overrides {
            alpha: self.alpha,
            samples: self.samples,
            seed: self.seed,
            manifold,
        })
    }

    fn out_dir(&self, suite: &Suite) -> PathBuf {
        self.out
            .clone()
            .or_else(|| suite.out.clone())
            .unwrap_or_else(|| PathBuf::from("gtwalk-out"))
    }
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))
}

fn executor(threads: Option<usize>) -> Result<RayonExecutor, RunError> {
    RayonExecutor::new(threads.unwrap_or_else(exec::default_threads))
}

fn run_and_print(suite: &Suite, out: &Path, threads: Option<usize>) -> Result<i32, RunError> {
    let summary = run_suite(suite, out, &executor(threads)?)?;
    for r in &summary.reports {
        let bound = r.bound.map_or_else(|| "-".to_string(), |b| format!("{b:.6}"));
        println!(
            "{} {} estimate={:.6} stderr={:.6} bound={} ({})",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.estimate.mean,
            r.estimate.stderr,
            bound,
            r.kind
        );
    }
    println!("reports written to {}", out.display());
    Ok(summary.exit_code())
}

fn single(raw: RawExperiment, common: &Common) -> Result<Suite, RunError> {
    let mut raw = raw;
    common.overrides()?.apply(&mut raw);
    Ok(Suite {
        experiments: vec![raw.resolve()?],
        out: None,
    })
}

fn dispatch(cli: Cli) -> Result<i32, RunError> {
    match cli.cmd {
        Cmd::Run { config, common } => {
            let suite = parse_config(&read(&config)?, &common.overrides()?)?;
            run_and_print(&suite, &common.out_dir(&suite), cli.threads)
        }
        Cmd::Walk {
            common,
            t1,
            t2,
            exit_radius,
            dump,
        } => {
            let raw = RawExperiment {
                kind: Some(ExperimentKind::Walk),
                manifold: Some(ManifoldDescriptor::Euclidean { dim: 2 }),
                t1: Some(t1),
                t2: Some(t2),
                alpha: Some(0.05),
                seed: Some(0),
                exit_radius,
                dump_paths: (dump > 0).then_some(dump),
                ..Default::default()
            };
            let suite = single(raw, &common)?;
            run_and_print(&suite, &common.out_dir(&suite), cli.threads)
        }
        Cmd::Couple {
            common,
            t1,
            t2,
            d0,
            coupling,
            delta_couple,
            k,
            dump,
        } => {
            let raw = RawExperiment {
                kind: Some(ExperimentKind::Couple),
                manifold: Some(ManifoldDescriptor::Euclidean { dim: 2 }),
                t1: Some(t1),
                t2: Some(t2),
                alpha: Some(0.05),
                seed: Some(0),
                d0: Some(d0),
                coupling: Some(match coupling {
                    CouplingArg::Reflection => CouplingChoice::Reflection,
                    CouplingArg::ParallelTransport => CouplingChoice::ParallelTransport,
                }),
                delta_couple,
                k,
                dump_paths: (dump > 0).then_some(dump),
                ..Default::default()
            };
            let suite = single(raw, &common)?;
            run_and_print(&suite, &common.out_dir(&suite), cli.threads)
        }
        Cmd::Verify { name, common } => {
            let overrides = common.overrides()?;
            let texts: Vec<&str> = if name == "all" {
                presets::PRESETS.iter().map(|p| p.2).collect()
            } else {
                match presets::find(&name) {
                    Some(t) => vec![t],
                    None => {
                        let names: Vec<&str> = presets::PRESETS.iter().map(|p| p.0).collect();
                        return Err(RunError::Config(gtwalk::config::ConfigError {
                            path: "verify".into(),
                            message: format!("unknown preset `{name}` (expected all, {})", names.join(", ")),
                        }));
                    }
                }
            };
            let mut suite = Suite {
                experiments: Vec::new(),
                out: None,
            };
            for t in texts {
                suite.experiments.extend(parse_config(t, &overrides)?.experiments);
            }
            run_and_print(&suite, &common.out_dir(&suite), cli.threads)
        }
        Cmd::ListModels => {
            println!("manifolds:");
            for (syntax, what) in KINDS {
                println!("  {syntax:<28} {what}");
            }
            println!("experiment kinds:");
            for k in ExperimentKind::ALL {
                println!("  {k}");
            }
            println!("verify presets:");
            for (name, what, _) in presets::PRESETS {
                println!("  {name:<28} {what}");
            }
            Ok(0)
        }
        Cmd::DumpPaths { config, count, common } => {
            let suite = parse_config(&read(&config)?, &common.overrides()?)?;
            let out = common.out_dir(&suite);
            let mut n = 0;
            for exp in &suite.experiments {
                if matches!(
                    exp.kind(),
                    ExperimentKind::Convergence | ExperimentKind::FellerTest | ExperimentKind::OuSurvival
                ) {
                    continue;
                }
                let files = experiment::dump_paths(exp, &out.join(&exp.id), count.min(exp.n_paths))?;
                n += files.len();
            }
            println!("{n} path files written under {}", out.display());
            Ok(0)
        }
        Cmd::Columns { file, cols } => {
            let f = std::fs::File::open(&file).map_err(|e| RunError::io(&file, e))?;
            gtwalk::paths::gnuplot_columns(f, &cols, std::io::stdout().lock())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { gtwalk::EXIT_ERROR } else { gtwalk::EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(gtwalk::EXIT_ERROR as u8)
        }
    }
}
