//! `manifest.json`: what ran, with which resolved configuration, and the
//! digest of every file it wrote.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub versions: Versions,
    pub seeds: Seeds,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub manifold_core: String,
    pub manifold_cli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub cci: u64,
    pub embed: u64,
    pub label: u64,
    pub loss: u64,
    pub random_baseline: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub file: PathBuf,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.canonical_json().as_bytes())
}

impl Manifest {
    pub fn build(
        stage: Stage,
        cfg: &ExperimentConfig,
        out: &Path,
        threads: usize,
        files: &[PathBuf],
        elapsed: Duration,
    ) -> CliResult<Self> {
        let mut outputs = files
            .iter()
            .map(|f| {
                let bytes = std::fs::read(f).map_err(CliError::io)?;
                Ok(OutputFile {
                    file: f.strip_prefix(out).unwrap_or(f).to_path_buf(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        Ok(Self {
            command: stage.name().to_string(),
            config_sha256: config_hash(cfg),
            config: cfg.clone(),
            versions: Versions {
                manifold_core: manifold_core::VERSION.to_string(),
                manifold_cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            seeds: Seeds {
                cci: cfg.cci.seed,
                embed: cfg.embed.seed,
                label: cfg.label.seed,
                loss: cfg.loss.seed,
                random_baseline: cfg.sweep.random_seed,
            },
            threads,
            started_unix: now.saturating_sub(elapsed).as_secs(),
            wall_time_seconds: elapsed.as_secs_f64(),
            outputs,
        })
    }
}
