//! Configuration loading and merging. Precedence: built-in defaults, then
//! the `--config` file (TOML or JSON), then command-line flags.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// A one-dimensional parameter grid: either an explicit list of values or
/// an inclusive `start..stop` range with a point count.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range { start: f64, stop: f64, steps: usize },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let values = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, steps } => {
                if *steps == 0 {
                    return Err(CliError::config("grid needs at least one step"));
                }
                if *steps == 1 {
                    vec![*start]
                } else {
                    let h = (stop - start) / (*steps as f64 - 1.0);
                    (0..*steps).map(|k| start + h * k as f64).collect()
                }
            }
        };
        if values.is_empty() {
            return Err(CliError::config("grid is empty"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config("grid contains a non-finite value"));
        }
        Ok(values)
    }
}

/// Command-line grid syntax: `start:stop:steps` or a comma-separated list.
impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected start:stop:steps, got `{s}`"));
            }
            let start: f64 = parts[0].parse().map_err(|e| format!("bad start: {e}"))?;
            let stop: f64 = parts[1].parse().map_err(|e| format!("bad stop: {e}"))?;
            let steps: usize = parts[2].parse().map_err(|e| format!("bad steps: {e}"))?;
            Ok(Grid::Range { start, stop, steps })
        } else {
            let values: Result<Vec<f64>, _> =
                s.split(',').map(|p| p.trim().parse::<f64>()).collect();
            Ok(Grid::List(values.map_err(|e| format!("bad list entry: {e}"))?))
        }
    }
}

/// Raw per-file configuration; every field optional so partial files work.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<crate::output::OutputFormat>,
    pub threads: Option<usize>,
    pub deterministic: Option<bool>,
    pub exact: Option<ExactFile>,
    pub vmps: Option<VmpsFile>,
    pub locent: Option<LocentFile>,
    pub disentangle: Option<DisentangleFile>,
    pub scan: Option<ScanFile>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactFile {
    pub ns: Option<Vec<usize>>,
    pub j: Option<Grid>,
    pub bx: Option<f64>,
    pub bz: Option<f64>,
    pub cross_check: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmpsFile {
    pub n: Option<usize>,
    pub bond_dim: Option<usize>,
    pub sweeps: Option<usize>,
    pub restarts: Option<usize>,
    pub j: Option<f64>,
    pub bx: Option<Grid>,
    pub bz: Option<f64>,
    pub per_restart: Option<bool>,
    pub cross_check: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocentFile {
    pub mode: Option<LocentMode>,
    pub ns: Option<Vec<usize>>,
    pub j: Option<Grid>,
    pub bx: Option<f64>,
    pub bz: Option<f64>,
    pub bond_dim: Option<usize>,
    pub samples: Option<usize>,
    pub n_z: Option<usize>,
    pub restarts: Option<usize>,
    pub sweeps: Option<usize>,
    pub exhaustive: Option<bool>,
    pub separations: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisentangleFile {
    pub j: Option<Grid>,
    pub c: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanFile {
    pub j: Option<Grid>,
    pub resolution: Option<f64>,
}

/// Loads a TOML or JSON config file, deciding the syntax by extension and
/// falling back to trying both.
pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let parsed = match ext {
        "toml" => toml::from_str(&text).map_err(|e| e.to_string()),
        "json" => serde_json::from_str(&text).map_err(|e| e.to_string()),
        _ => toml::from_str(&text)
            .map_err(|e| e.to_string())
            .or_else(|toml_err| {
                serde_json::from_str(&text)
                    .map_err(|json_err| format!("as TOML: {toml_err}; as JSON: {json_err}"))
            }),
    };
    parsed.map_err(|e| CliError::config(format!("cannot parse {}: {e}", path.display())))
}

/// Settings shared by every subcommand, fully resolved. Thread count and
/// output location live outside: they do not affect the numbers, so they
/// are excluded from the reproducibility contract (and from the config
/// echo).
#[derive(Clone, Debug)]
pub struct Common {
    pub seed: u64,
    pub format: crate::output::OutputFormat,
    pub deterministic: bool,
}

/// Endpoint separation used by the string/protocol conventions: the largest
/// odd distance not exceeding half the ring, leaving room for the caps.
pub fn half_ring_separation(n: usize) -> usize {
    let half = n / 2;
    half - 1 - (half % 2)
}

/// Picking a locent scan axis: a coupling grid at fixed endpoints, or an
/// endpoint-separation sweep at a fixed parameter point (for length
/// classification).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LocentMode {
    Couplings,
    Separations,
}
