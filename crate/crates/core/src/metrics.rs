//! Deterministic metric export and the run manifest.
//!
//! Metric tables are plain CSV with a versioned `# schema:` comment line on
//! top. Rows are formatted with shortest round-trip float printing, so two
//! runs with the same numbers produce byte-identical files. Wall-clock
//! timings are never mixed into these tables; they go to their own file so
//! the deterministic outputs stay comparable across machines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One CSV value. Floats print shortest-round-trip, never in scientific
/// notation surprises from locale or padding.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::UInt(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Float(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Bool(v) => {
                let _ = write!(out, "{}", if *v { 1 } else { 0 });
            }
            Cell::Text(v) => {
                debug_assert!(
                    !v.contains(',') && !v.contains('\n'),
                    "cell text must not need quoting"
                );
                let _ = write!(out, "{v}");
            }
        }
    }
}

/// A versioned, append-only metric table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    name: &'static str,
    version: u32,
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl MetricTable {
    pub fn new(name: &'static str, version: u32, columns: &'static [&'static str]) -> MetricTable {
        MetricTable {
            name,
            version,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the schema"
        );
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Renders the whole table: schema comment, column header, rows.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema: {}/{}", self.name, self.version);
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                first = false;
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(Error::from)
    }
}

/// Per-episode training metrics (no wall-clock columns).
pub fn train_table() -> MetricTable {
    MetricTable::new(
        "train_episodes",
        1,
        &[
            "episode",
            "instance_seed",
            "steps",
            "episode_return",
            "win",
            "blue_alive",
            "red_alive",
            "lower_updates",
            "upper_updates",
            "skipped_updates",
        ],
    )
}

/// Per-instance evaluation metrics (no wall-clock columns).
pub fn eval_table() -> MetricTable {
    MetricTable::new(
        "eval_instances",
        1,
        &[
            "instance",
            "seed",
            "steps",
            "outcome",
            "win",
            "blue_alive",
            "red_alive",
            "episode_return",
        ],
    )
}

/// Decision-latency table, kept in its own file because wall-clock numbers
/// differ between machines and would break byte-level comparisons of the
/// result tables.
pub fn timing_table() -> MetricTable {
    MetricTable::new(
        "decision_timings",
        1,
        &["instance", "decisions", "mean_ms", "max_ms"],
    )
}

/// Per-size generalization sweep results.
pub fn sweep_table() -> MetricTable {
    MetricTable::new(
        "generalization_sweep",
        1,
        &[
            "team_size",
            "instances",
            "wins",
            "losses",
            "draws",
            "win_rate",
        ],
    )
}

/// Hex SHA-256 of arbitrary bytes; used to fingerprint configs.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Everything needed to rerun a run: written to `manifest.json` in the
/// output directory before any stochastic work starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    /// The invoking command line, joined with spaces.
    pub command: String,
    /// SHA-256 over the fully-resolved config serialization.
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    /// Files the run intends to produce, relative to the manifest.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: String, config_bytes: &[u8], seed: u64, outputs: Vec<String>) -> RunManifest {
        RunManifest {
            schema: 1,
            command,
            config_hash: config_hash(config_bytes),
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
        }
    }

    /// Serializes into `dir/manifest.json`, creating `dir` if needed.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(Error::from)
    }
}
