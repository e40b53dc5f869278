//! Experiment runner: configuration, result store, operations, the
//! verification battery and CSV export behind the `cone-lab` binary.

pub mod config;
pub mod export;
pub mod ops;
pub mod store;
pub mod suites;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::geometry::GeometryError;
use crate::hamenstadt::HamenstadtError;
use crate::measures::MeasureError;
use crate::models::ModelError;
use crate::uniformize::UniformizeError;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const SUITE_FAILURE: u8 = 1;
    pub const CONFIG_ERROR: u8 = 2;
    pub const NONCONVERGENCE: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant failure: {0}")]
    Suite(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => exit::CONFIG_ERROR,
            CliError::Suite(_) => exit::SUITE_FAILURE,
            CliError::NonConvergence(_) => exit::NONCONVERGENCE,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<HamenstadtError> for CliError {
    fn from(e: HamenstadtError) -> Self {
        match e {
            HamenstadtError::Geometry(g) => g.into(),
            HamenstadtError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            HamenstadtError::OutsideChart(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<UniformizeError> for CliError {
    fn from(e: UniformizeError) -> Self {
        match e {
            UniformizeError::Geometry(g) => g.into(),
            UniformizeError::Hamenstadt(h) => h.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Hamenstadt(h) => h.into(),
            MeasureError::Reach { .. } | MeasureError::NotConverged(_) => CliError::NonConvergence(e.to_string()),
            MeasureError::Audit(_) | MeasureError::NonMonotone { .. } => CliError::Suite(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Measure(m) => m.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}
