//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::ops::Op;
use super::CliError;
use crate::models::ModelSpec;

fn default_output() -> PathBuf {
    PathBuf::from("results.jsonl")
}

/// `{model, op, params, seed, workers, output}` as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub op: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses the machine default.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.operation()?;
        Ok(cfg)
    }

    /// Typed operation with parameter defaults filled in.
    pub fn operation(&self) -> Result<Op, CliError> {
        Op::from_parts(&self.op, &self.params)
    }

    /// SHA-256 of the canonical JSON form: sorted keys, defaults resolved.
    pub fn hash(&self) -> Result<String, CliError> {
        let op = self.operation()?;
        let canon = serde_json::json!({
            "model": self.model,
            "op": op.name(),
            "params": op.params_json(),
            "seed": self.seed,
            "workers": self.workers,
        });
        Ok(hex_digest(canon.to_string().as_bytes()))
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_hash_stability() {
        let a = ExperimentConfig::parse(r#"{"model": {"kind": "HalfPlane", "a": 1.0}, "op": "entropy_estimate"}"#).unwrap();
        let b = ExperimentConfig::parse(
            r#"{"model": {"kind": "HalfPlane", "a": 1.0}, "op": "entropy_estimate", "params": {"s_max": 8}, "seed": 0}"#,
        )
        .unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn schema_violations_are_config_errors() {
        for bad in [
            "{not json",
            r#"{"model": {"kind": "HalfPlane", "a": 1.0}, "op": "no_such_op"}"#,
            r#"{"model": {"kind": "HalfPlane", "a": 1.0}, "op": "entropy_estimate", "params": {"s_max": "eight"}}"#,
            r#"{"model": {"kind": "HalfPlane", "a": 1.0}, "op": "entropy_estimate", "colour": 3}"#,
        ] {
            let err = ExperimentConfig::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), super::super::exit::CONFIG_ERROR, "{bad}");
        }
    }
}
