//! Report files: an authoritative JSON document and a one-row CSV mirror.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gtwalk_core::stats::{McEstimate, VerificationReport};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
}

impl From<&McEstimate> for Estimate {
    fn from(e: &McEstimate) -> Self {
        Self {
            n: e.n,
            mean: e.mean,
            stderr: e.stderr,
            ci95: [e.ci95.0, e.ci95.1],
        }
    }
}

/// Outcome of one experiment.
///
/// `bound` is absent for experiments that only simulate. Everything except
/// `runtime_ms` is a function of the configuration alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub kind: String,
    pub params: BTreeMap<String, f64>,
    pub estimate: Estimate,
    pub bound: Option<f64>,
    pub pass: bool,
    pub bias_terms: BTreeMap<String, f64>,
    pub seed: u64,
    pub runtime_ms: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(id: &str, kind: &str, estimate: &McEstimate, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            kind: kind.to_string(),
            params: BTreeMap::new(),
            estimate: estimate.into(),
            bound: None,
            pass: true,
            bias_terms: BTreeMap::new(),
            seed,
            runtime_ms: 0,
            details: BTreeMap::new(),
        }
    }

    pub fn from_verification(id: &str, kind: &str, v: &VerificationReport) -> Self {
        let mut r = Self::new(id, kind, &v.estimate, v.seed);
        r.bound = Some(v.bound);
        r.pass = v.pass;
        r.params.extend(v.params.iter().cloned());
        r.bias_terms.extend(v.bias_terms.iter().cloned());
        r.detail("margin", v.margin);
        r
    }

    pub fn param(&mut self, name: &str, v: f64) -> &mut Self {
        self.params.insert(name.to_string(), v);
        self
    }

    pub fn detail(&mut self, name: &str, v: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(v).unwrap_or(serde_json::Value::Null);
        self.details.insert(name.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// CSV header and row with the same fields as the JSON document; `params`,
    /// `bias_terms` and `details` are embedded as compact JSON.
    pub fn to_csv(&self) -> Result<String, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "id",
            "kind",
            "estimate_n",
            "estimate_mean",
            "estimate_stderr",
            "ci95_lo",
            "ci95_hi",
            "bound",
            "pass",
            "seed",
            "runtime_ms",
            "params",
            "bias_terms",
            "details",
        ];
        let row = [
            self.id.clone(),
            self.kind.clone(),
            self.estimate.n.to_string(),
            num(self.estimate.mean),
            num(self.estimate.stderr),
            num(self.estimate.ci95[0]),
            num(self.estimate.ci95[1]),
            self.bound.map(num).unwrap_or_default(),
            self.pass.to_string(),
            self.seed.to_string(),
            self.runtime_ms.to_string(),
            compact(&self.params),
            compact(&self.bias_terms),
            compact(&self.details),
        ];
        w.write_record(header).map_err(RunError::csv)?;
        w.write_record(&row).map_err(RunError::csv)?;
        let bytes = w.into_inner().map_err(|e| RunError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Writes `<dir>/<id>.json` and `<dir>/<id>.csv`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), RunError> {
        let json_path = dir.join(format!("{}.json", self.id));
        let csv_path = dir.join(format!("{}.csv", self.id));
        fs::write(&json_path, self.to_json()).map_err(|e| RunError::io(&json_path, e))?;
        fs::write(&csv_path, self.to_csv()?).map_err(|e| RunError::io(&csv_path, e))?;
        Ok((json_path, csv_path))
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

fn compact<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_csv_carry_the_same_fields() {
        let est = McEstimate::from_samples(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        let mut r = Report::new("x", "walk", &est, 5);
        r.param("alpha", 0.05).detail("note", "ok");
        r.bound = Some(0.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["id", "params", "estimate", "bound", "pass", "bias_terms", "seed", "runtime_ms"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let csv = r.to_csv().unwrap();
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(&rec[0], "x");
        assert_eq!(&rec[3], "0.5");
        assert_eq!(&rec[7], "0.5");
        assert_eq!(&rec[11], "{\"alpha\":0.05}");
    }
}
