//! Append-only JSON-lines result store.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CliError;
use crate::models::ModelSpec;

/// How a reported number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    /// Exact integer count.
    Count,
    /// Extremum or fit over seeded random samples; no a-priori error bound.
    Sampled,
}

/// A headline number with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub name: String,
    pub value: f64,
    pub method: Method,
    pub abs_error: Option<f64>,
}

impl Tagged {
    pub fn new(name: impl Into<String>, value: f64, method: Method, abs_error: Option<f64>) -> Self {
        Self { name: name.into(), value, method, abs_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    /// Hash of everything except timing, identical across re-runs.
    pub output_hash: String,
    pub model: ModelSpec,
    pub op: String,
    pub params: Value,
    pub seed: u64,
    pub workers: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub values: Vec<Tagged>,
    pub report: Value,
    pub wall_time_s: f64,
    pub timestamp: u64,
    pub version: String,
}

pub fn append(path: &Path, record: &ResultRecord) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut line = serde_json::to_string(record).map_err(|e| CliError::Config(e.to_string()))?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(line.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Every record in the store as raw JSON, in append order.
pub fn read_all(path: &Path) -> Result<Vec<Value>, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), k + 1)))?;
        out.push(v);
    }
    Ok(out)
}
