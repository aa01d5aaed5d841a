//! CSV and manifest serialization.
//!
//! CSV bodies are deterministic functions of (config, seed): floats are
//! written in full-precision scientific notation (17 significant digits)
//! so regression diffs are meaningful. Timestamps and wall time live only
//! in the JSON manifest.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Full-precision scientific rendering of one float field.
pub fn float_field(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        String::from("nan")
    } else if x > 0.0 {
        String::from("inf")
    } else {
        String::from("-inf")
    }
}

/// A CSV artifact under construction.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "column count mismatch");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.render().as_bytes())?;
        Ok(())
    }
}

/// The run manifest: config echo, seed, versions, and timing. Re-parsing
/// the embedded config reproduces the effective configuration.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub seed: u64,
    pub threads: usize,
    pub version: String,
    pub wall_time_secs: f64,
    pub generated_unix_ms: u128,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl Manifest {
    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("manifest serialization failed: {e}")))?;
        let mut file = std::fs::File::create(path)?;
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}
