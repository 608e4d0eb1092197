//! The run manifest: tool version, configuration hash, wall time and the
//! files each experiment produced.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Suite;
use crate::error::RunError;
use crate::report::Report;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRef {
    pub id: String,
    pub kind: String,
    pub pass: bool,
    /// Paths relative to the output directory.
    pub json: String,
    pub csv: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dumps: Vec<String>,
}

fn relative(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

impl ReportRef {
    pub fn new(report: &Report, base: &Path, json: &Path, csv: &Path, dumps: &[std::path::PathBuf]) -> Self {
        Self {
            id: report.id.clone(),
            kind: report.kind.clone(),
            pass: report.pass,
            json: relative(base, json),
            csv: relative(base, csv),
            dumps: dumps.iter().map(|d| relative(base, d)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the canonical JSON of the resolved experiments.
    pub config_hash: String,
    pub wall_time_ms: u64,
    pub reports: Vec<ReportRef>,
}

/// Hex SHA-256 of the suite's canonical JSON.
pub fn config_hash(suite: &Suite) -> String {
    hex::encode(Sha256::digest(suite.canonical_json().as_bytes()))
}

impl RunManifest {
    pub fn new(suite: &Suite, reports: Vec<ReportRef>, wall_time_ms: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(suite),
            wall_time_ms,
            reports,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut s = serde_json::to_string_pretty(self).expect("manifests serialize");
        s.push('\n');
        std::fs::write(path, s).map_err(|e| RunError::io(path, e))
    }
}
