//! Experiment runner for `rwrelab`: JSON configs in, CSV/JSON results and a
//! manifest out. Every replica draws from a seed path under the config's root
//! seed, so results do not depend on the worker count.

// `!(x > 0.0)` is how NaN gets rejected along with the bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod config;
pub mod experiments;
pub mod figure;
pub mod manifest;
pub mod selftest;
pub mod table;

use thiserror::Error;

pub use config::{Budget, Experiment, ExperimentConfig, ModelId};
pub use manifest::{rerun, run_experiment, RunManifest, RunStatus};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RWRELAB_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{file} has no column {column}")]
    MissingColumn { file: String, column: String },
    #[error("model rejected the parameters: {0}")]
    Model(String),
    #[error("rerun differs from the manifest in {0:?}")]
    Mismatch(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::MissingColumn { .. } | Self::Model(_) => EXIT_CONFIG,
            Self::Mismatch(_) | Self::Io(_) => EXIT_FAILURE,
        }
    }
}

/// Worker count: the explicit value, else `RWRELAB_WORKERS`, else the
/// number of available cores.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
