//! Experiment harness for reservoir-computing OFDM equalization.
//!
//! Each command of the `rc-eq` binary is a plain function here, so tests and other
//! programs can run the same pipelines in-process:
//!
//! * [`pipeline::derive_weights`]: channel statistics to optimum reservoir weights.
//! * [`pipeline::run_ser`]: Monte-Carlo SER sweep over all equalizers.
//! * [`pipeline::verify_rank`]: eigenvalue spectrum of the channel-inverse covariance.
//! * [`plot::render_svg`]: log-scale SER curves from result CSVs.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod pipeline;
pub mod plot;

use std::fmt;
use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use manifest::RunManifest;

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    ChannelSampling,
    Covariance,
    Basis,
    RationalFit,
    EsnInit,
    Simulation,
    Rank,
    Plot,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::ChannelSampling => "channel-sampling",
            Stage::Covariance => "covariance",
            Stage::Basis => "basis",
            Stage::RationalFit => "rational-fit",
            Stage::EsnInit => "esn-init",
            Stage::Simulation => "simulation",
            Stage::Rank => "rank",
            Stage::Plot => "plot",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("[{stage}] {message}")]
    Stage { stage: Stage, message: String },
    #[error("schema error in {source_name}: {message}")]
    Schema { source_name: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn stage(stage: Stage, err: impl fmt::Display) -> Self {
        CliError::Stage { stage, message: err.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for bad input (config, schema, files), 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { .. } => 3,
            CliError::Config(_) | CliError::Schema { .. } | CliError::Io { .. } => 2,
        }
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &std::path::Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
