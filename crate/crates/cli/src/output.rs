//! Output rendering: CSV with a commented metadata header, or JSON with a
//! metadata envelope. Both carry the tool version, the resolved config, the
//! seed, and a SHA-256 hash of the tabular body, so a result file is
//! self-describing and reproducibility is checkable by re-hashing.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One table cell. Floats are rendered with Rust's shortest-roundtrip
/// formatting, so equal bit patterns always produce equal text.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// A result table: fixed column names plus data rows.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// The canonical tabular body: header line plus comma-joined rows.
    /// Hashes are computed over this text in both output formats, so the
    /// hash identifies the data independently of the envelope.
    fn body(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Run metadata recorded in every output file. The config echo contains
/// only inputs that affect the numbers (not output paths or thread counts),
/// so byte-identical reproduction needs exactly: same config, same seed.
pub struct Meta {
    pub command: &'static str,
    pub seed: u64,
    pub deterministic: bool,
    pub config: serde_json::Value,
    /// Free-form summary lines (e.g. a classification verdict) that belong
    /// with the results but not in the per-row schema.
    pub notes: Vec<(String, String)>,
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn render(meta: &Meta, table: &Table, format: OutputFormat) -> String {
    let body = table.body();
    let hash = sha256_hex(&body);
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# clusterchain {VERSION}\n"));
            out.push_str(&format!("# command: {}\n", meta.command));
            out.push_str(&format!("# seed: {}\n", meta.seed));
            out.push_str(&format!("# deterministic: {}\n", meta.deterministic));
            out.push_str(&format!("# config: {}\n", meta.config));
            for (key, value) in &meta.notes {
                out.push_str(&format!("# {key}: {value}\n"));
            }
            out.push_str(&format!("# sha256: {hash}\n"));
            out.push_str(&body);
            out
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct MetaOut<'a> {
                tool: &'static str,
                version: &'static str,
                command: &'static str,
                seed: u64,
                deterministic: bool,
                config: &'a serde_json::Value,
                #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
                notes: serde_json::Map<String, serde_json::Value>,
                sha256: String,
            }
            #[derive(Serialize)]
            struct Envelope<'a> {
                meta: MetaOut<'a>,
                columns: &'a [&'static str],
                rows: &'a [Vec<Cell>],
            }
            let notes = meta
                .notes
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect();
            let envelope = Envelope {
                meta: MetaOut {
                    tool: "clusterchain",
                    version: VERSION,
                    command: meta.command,
                    seed: meta.seed,
                    deterministic: meta.deterministic,
                    config: &meta.config,
                    notes,
                    sha256: hash,
                },
                columns: &table.columns,
                rows: &table.rows,
            };
            let mut out = serde_json::to_string_pretty(&envelope)
                .expect("result cells contain no non-finite floats");
            out.push('\n');
            out
        }
    }
}

/// Writes to the path, or to stdout when the path is `None` or `-`.
pub fn write_output(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, content),
        _ => std::io::stdout().write_all(content.as_bytes()),
    }
}
