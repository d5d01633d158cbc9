//! Writing a run to disk and replaying it from its manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments::{self, SeedGroup};
use crate::{with_workers, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "results.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// Some walks hit their step or time cap; results are lower bounds.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of `config.json` as written.
    pub config_hash: String,
    pub code_version: String,
    pub wall_clock_secs: f64,
    pub workers: usize,
    pub status: RunStatus,
    pub seeds: Vec<SeedGroup>,
    /// Every output file except the manifest, in write order.
    pub files: Vec<FileDigest>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        m.config.validate()?;
        Ok(m)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn code_version() -> String {
    format!("expcli {}", env!("CARGO_PKG_VERSION"))
}

/// Runs `cfg` with `workers` threads and writes everything under `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let started = Instant::now();
    let outcome = with_workers(workers, || experiments::execute(cfg))??;
    fs::create_dir_all(out_dir)?;

    let mut files = Vec::new();
    let mut write = |name: &str, bytes: &[u8]| -> Result<String, CliError> {
        fs::write(out_dir.join(name), bytes)?;
        let digest = sha256_hex(bytes);
        files.push(FileDigest { name: name.to_string(), sha256: digest.clone() });
        Ok(digest)
    };

    let config_hash = write(CONFIG_FILE, cfg.resolved_json().as_bytes())?;
    for (name, table) in &outcome.tables {
        write(name, &table.to_bytes())?;
    }
    let status = if outcome.partial { RunStatus::Partial } else { RunStatus::Complete };
    let summary = serde_json::json!({
        "kind": cfg.experiment.kind(),
        "status": status,
        "summary": outcome.summary,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write(SUMMARY_FILE, text.as_bytes())?;

    let manifest = RunManifest {
        config_hash,
        code_version: code_version(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        workers,
        status,
        seeds: outcome.seeds,
        files,
        config: cfg.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(out_dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

/// Re-runs the manifest's config into `out_dir` and checks every digest.
/// Returns the new manifest, or `Mismatch` naming the files that differ.
pub fn rerun(manifest: &RunManifest, out_dir: &Path, workers: usize) -> Result<RunManifest, CliError> {
    let fresh = run_experiment(&manifest.config, out_dir, workers)?;
    let mut differ: Vec<String> = manifest
        .files
        .iter()
        .filter(|f| !fresh.files.iter().any(|g| g == *f))
        .map(|f| f.name.clone())
        .collect();
    differ.extend(fresh.files.iter().filter(|g| !manifest.files.iter().any(|f| f.name == g.name)).map(|g| g.name.clone()));
    if differ.is_empty() {
        Ok(fresh)
    } else {
        Err(CliError::Mismatch(differ))
    }
}

/// Default output directory when neither the CLI nor the config names one.
pub fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}", cfg.experiment.kind(), cfg.seed)))
}
