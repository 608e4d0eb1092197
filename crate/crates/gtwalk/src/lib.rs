//! Experiment runner for `gtwalk-core`: TOML configuration, a Rayon path
//! executor, JSON/CSV reports, path dumps and the run manifest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod descriptor;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod manifest;
pub mod paths;
pub mod presets;
pub mod report;

use std::path::Path;
use std::time::Instant;

use gtwalk_core::exec::PathExecutor;

pub use config::{parse_config, Experiment, Overrides, Suite};
pub use error::RunError;
pub use exec::RayonExecutor;
pub use manifest::{ReportRef, RunManifest};
pub use report::Report;

/// Exit status for a run in which every experiment passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status for configuration, numerical or I/O errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when at least one verification failed.
pub const EXIT_FAIL: i32 = 2;

pub struct RunSummary {
    pub manifest: RunManifest,
    pub reports: Vec<Report>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Runs every experiment of the suite in order and writes
/// `<out>/<id>.json`, `<out>/<id>.csv`, requested path dumps under
/// `<out>/<id>/` and `<out>/manifest.json`.
pub fn run_suite<E: PathExecutor>(suite: &Suite, out: &Path, exec: &E) -> Result<RunSummary, RunError> {
    let started = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| RunError::io(out, e))?;
    let mut reports = Vec::with_capacity(suite.experiments.len());
    let mut refs = Vec::with_capacity(suite.experiments.len());
    for exp in &suite.experiments {
        let t = Instant::now();
        let mut report = experiment::run_experiment(exp, exec)?;
        report.runtime_ms = t.elapsed().as_millis() as u64;
        let (json, csv) = report.write(out)?;
        let dump_count = match &exp.spec {
            config::Spec::Walk { dump_paths, .. } | config::Spec::Couple { dump_paths, .. } => *dump_paths,
            _ => 0,
        };
        let dumps = if dump_count > 0 {
            experiment::dump_paths(exp, &out.join(&exp.id), dump_count)?
        } else {
            Vec::new()
        };
        refs.push(ReportRef::new(&report, out, &json, &csv, &dumps));
        reports.push(report);
    }
    let manifest = RunManifest::new(suite, refs, started.elapsed().as_millis() as u64);
    manifest.write(&out.join("manifest.json"))?;
    Ok(RunSummary { manifest, reports })
}
