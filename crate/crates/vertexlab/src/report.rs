//! Suite reports and their JSON / CSV encodings.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliResult;

/// Version written into every report.
pub const REPORT_VERSION: &str = concat!("vertexlab ", env!("CARGO_PKG_VERSION"));

/// First 16 hex digits of the SHA-256 of `s`.
pub fn digest(s: &str) -> String {
    let h = Sha256::digest(s.as_bytes());
    h.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// One check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    /// Stable identifier; rows are sorted by it.
    pub id: String,
    /// Parameters in `key=value;...` form.
    pub params: String,
    /// Digest of `params`.
    pub params_digest: String,
    /// Residual, absent when the check raised an error.
    pub residual: Option<f64>,
    /// Tolerance the residual is compared with.
    pub tolerance: f64,
    /// `residual <= tolerance`.
    pub pass: bool,
    /// Exact or derived value reported by the check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// Error message of a failed evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckRow {
    /// Row from an evaluated residual.
    pub fn new(id: String, params: String, residual: Result<f64, String>, tolerance: f64) -> Self {
        let params_digest = digest(&params);
        match residual {
            Ok(r) => Self { id, params, params_digest, residual: Some(r), tolerance, pass: r <= tolerance, value: None, error: None },
            Err(e) => Self { id, params, params_digest, residual: None, tolerance, pass: false, value: None, error: Some(e) },
        }
    }
}

/// Totals of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Number of rows.
    pub count: usize,
    /// Passing rows.
    pub passed: usize,
    /// Failing rows.
    pub failed: usize,
    /// Largest residual.
    pub max_residual: f64,
    /// Whether the wall-time budget stopped the suite early.
    pub truncated: bool,
    /// Checks left out by the truncation.
    pub skipped: usize,
    /// Wall time in milliseconds, only with `timings`.
    pub wall_time_ms: Option<u64>,
}

/// Result of one suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    /// Producer version.
    pub version: String,
    /// Suite name.
    pub suite: String,
    /// Seed.
    pub seed: u64,
    /// Digest of the canonical configuration.
    pub config_digest: String,
    /// Rows sorted by id.
    pub rows: Vec<CheckRow>,
    /// Totals.
    pub summary: Summary,
}

impl SuiteReport {
    /// Report from unsorted rows.
    pub fn new(suite: &str, seed: u64, config_digest: String, mut rows: Vec<CheckRow>, skipped: usize, wall_time_ms: Option<u64>) -> Self {
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let passed = rows.iter().filter(|r| r.pass).count();
        let max_residual = rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
        let summary = Summary {
            count: rows.len(),
            passed,
            failed: rows.len() - passed,
            max_residual,
            truncated: skipped > 0,
            skipped,
            wall_time_ms,
        };
        Self { version: REPORT_VERSION.to_string(), suite: suite.to_string(), seed, config_digest, rows, summary }
    }

    /// Every row passed and nothing was skipped.
    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0 && !self.summary.truncated
    }

    /// Row by id.
    pub fn row(&self, id: &str) -> Option<&CheckRow> {
        self.rows.binary_search_by(|r| r.id.as_str().cmp(id)).ok().map(|k| &self.rows[k])
    }

    /// Encoded report.
    pub fn encode(&self, format: Format) -> CliResult<Vec<u8>> {
        match format {
            Format::Json => {
                let mut v = serde_json::to_vec_pretty(self).expect("report serialises");
                v.push(b'\n');
                Ok(v)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["id", "params", "params_digest", "residual", "tolerance", "pass", "value", "error"])?;
                for r in &self.rows {
                    w.write_record([
                        r.id.clone(),
                        r.params.clone(),
                        r.params_digest.clone(),
                        r.residual.map(|x| x.to_string()).unwrap_or_default(),
                        r.tolerance.to_string(),
                        r.pass.to_string(),
                        r.value.clone().unwrap_or_default(),
                        r.error.clone().unwrap_or_default(),
                    ])?;
                }
                Ok(w.into_inner().map_err(|e| e.into_error())?)
            }
        }
    }

    /// One-line summary for the terminal.
    pub fn summary_line(&self) -> String {
        let s = &self.summary;
        let mut line = format!(
            "{}: {}/{} passed, max residual {:e}",
            self.suite, s.passed, s.count, s.max_residual
        );
        if s.truncated {
            line.push_str(&format!(", truncated by the time budget ({} checks skipped)", s.skipped));
        }
        line
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_sorted_and_counted() {
        let rows = vec![
            CheckRow::new("b".into(), "x=1".into(), Ok(1e-3), 1e-9),
            CheckRow::new("a".into(), "x=2".into(), Ok(1e-12), 1e-9),
            CheckRow::new("c".into(), "x=3".into(), Err("boom".into()), 1e-9),
        ];
        let r = SuiteReport::new("s", 1, "d".into(), rows, 0, None);
        assert_eq!(r.rows.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!((r.summary.passed, r.summary.failed), (1, 2));
        assert_eq!(r.summary.max_residual, 1e-3);
        assert!(r.row("b").is_some());
        assert!(!r.all_pass());
        let csv = String::from_utf8(r.encode(Format::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest("abc"), "ba7816bf8f01cfea");
    }
}
