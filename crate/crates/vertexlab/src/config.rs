//! Suite configuration: flags, JSON config files and their precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vertexlab_core::numerics::DEFAULT_ETA;

use crate::error::{CliError, CliResult};
use crate::lattice_io::LatticeFile;

/// Names accepted by `--suite`.
pub const SUITES: [&str; 8] = [
    "vertex-identities",
    "vertex-conservation",
    "vertex-parafermion",
    "sos-identities",
    "sos-currents",
    "equivalence",
    "csos-spectrum",
    "rsos-probe",
];

/// Seed used when neither a flag nor `VERTEXLAB_SEED` is given.
pub const DEFAULT_SEED: u64 = 7;
/// Wall-time budget per suite.
pub const DEFAULT_BUDGET_SECS: f64 = 300.0;
/// Parameter sets per identity.
pub const DEFAULT_SAMPLES: usize = 100;

/// Report encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// JSON document.
    #[default]
    Json,
    /// One CSV line per row.
    Csv,
}

/// Everything a suite run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Suite name, one of [`SUITES`].
    pub suite: String,
    /// Seed of every random draw.
    pub seed: u64,
    /// Anisotropies `[re, im]` cycled through by the samplers.
    pub etas: Vec<[f64; 2]>,
    /// Coprime pairs `(p, p')` for the cyclic model.
    pub pp: Vec<[i64; 2]>,
    /// Lattice sizes `[n_cols, n_rows]`; empty means the suite default.
    pub sizes: Vec<[usize; 2]>,
    /// Replaces every per-check tolerance when present.
    pub tol: Option<f64>,
    /// Parameter sets per identity.
    pub samples: usize,
    /// Values of `p` for the RSOS probe.
    pub rsos_p: Vec<u32>,
    /// Wall-time budget in seconds.
    pub budget_secs: f64,
    /// Record the wall time in the report (makes it run dependent).
    pub timings: bool,
    /// Explicit lattice replacing the seeded ones.
    pub lattice: Option<LatticeFile>,
    /// Output file; stdout when absent.
    pub out: Option<PathBuf>,
    /// Output encoding.
    pub format: Format,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: String::new(),
            seed: DEFAULT_SEED,
            etas: vec![[DEFAULT_ETA.re, DEFAULT_ETA.im]],
            pp: vec![[4, 3], [5, 4], [5, 3], [5, 2]],
            sizes: Vec::new(),
            tol: None,
            samples: DEFAULT_SAMPLES,
            rsos_p: vec![3, 4, 5],
            budget_secs: DEFAULT_BUDGET_SECS,
            timings: false,
            lattice: None,
            out: None,
            format: Format::Json,
        }
    }
}

impl SuiteConfig {
    /// Default configuration for `suite`, seeded from `VERTEXLAB_SEED` when set.
    pub fn for_suite(suite: &str) -> CliResult<Self> {
        let mut cfg = Self { suite: suite.to_string(), ..Self::default() };
        if let Some(seed) = env_seed()? {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    /// Reads a JSON config file.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Checks names and ranges.
    pub fn validate(&self) -> CliResult<()> {
        if !SUITES.contains(&self.suite.as_str()) {
            return Err(CliError::Usage(format!("unknown suite '{}'; expected one of {}", self.suite, SUITES.join(", "))));
        }
        if self.samples == 0 {
            return Err(CliError::Usage("samples must be positive".into()));
        }
        if self.etas.is_empty() {
            return Err(CliError::Usage("at least one eta is needed".into()));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Usage(format!("tolerance {t} must be positive")));
            }
        }
        if !(self.budget_secs.is_finite() && self.budget_secs > 0.0) {
            return Err(CliError::Usage(format!("budget {} must be positive", self.budget_secs)));
        }
        for &[c, r] in &self.sizes {
            if c == 0 || r == 0 || c * (r + 1) + r * (c + 1) > vertexlab_core::vertex_lattice::MAX_EDGES {
                return Err(CliError::Usage(format!("lattice {c}x{r} outside the supported sizes")));
            }
        }
        for &[p, pp] in &self.pp {
            vertexlab_core::csos::derive_ln(p, pp).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(l) = &self.lattice {
            l.tail_path()?;
        }
        for &p in &self.rsos_p {
            if !(2..=8).contains(&p) {
                return Err(CliError::Usage(format!("RSOS p = {p} outside 2..=8")));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the fields that determine the rows.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.format = Format::Json;
        c.timings = false;
        c.budget_secs = 0.0;
        serde_json::to_string(&c).expect("config serialises")
    }
}

/// `VERTEXLAB_SEED`, when set.
pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var("VERTEXLAB_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("VERTEXLAB_SEED='{s}' is not a u64"))),
        Err(_) => Ok(None),
    }
}

/// `re,im`.
pub fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("'{s}': expected re,im"))?;
    let re = a.trim().parse().map_err(|_| format!("'{a}' is not a number"))?;
    let im = b.trim().parse().map_err(|_| format!("'{b}' is not a number"))?;
    Ok([re, im])
}

/// `p,pprime`.
pub fn parse_pair(s: &str) -> Result<[i64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("'{s}': expected p,pprime"))?;
    Ok([a.trim().parse().map_err(|_| format!("'{a}' is not an integer"))?, b.trim().parse().map_err(|_| format!("'{b}' is not an integer"))?])
}

/// `NxM`.
pub fn parse_size(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("'{s}': expected NxM"))?;
    Ok([a.trim().parse().map_err(|_| format!("'{a}' is not a size"))?, b.trim().parse().map_err(|_| format!("'{b}' is not a size"))?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_complex("0.45,-0.2").unwrap(), [0.45, -0.2]);
        assert_eq!(parse_pair("5,4").unwrap(), [5, 4]);
        assert_eq!(parse_size("3x2").unwrap(), [3, 2]);
        assert!(parse_size("3,2").is_err());
    }

    #[test]
    fn validation() {
        let mut c = SuiteConfig { suite: "vertex-identities".into(), ..SuiteConfig::default() };
        assert!(c.validate().is_ok());
        c.suite = "nope".into();
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        c.suite = "csos-spectrum".into();
        c.pp = vec![[6, 4]];
        assert!(c.validate().is_err());
        c.pp = vec![[5, 4]];
        c.sizes = vec![[4, 4]];
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_config_files() {
        let c: SuiteConfig = serde_json::from_str(r#"{"suite": "rsos-probe", "rsos_p": [3]}"#).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.rsos_p, vec![3]);
        assert!(serde_json::from_str::<SuiteConfig>(r#"{"suit": "x"}"#).is_err());
    }
}
