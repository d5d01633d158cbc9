//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Which model family an experiment drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Btm,
    Rwre1d,
    Gwtree,
    Perc,
    Iic,
}

/// Experiment kind and its model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Displacement exponent of the trap model; `beta = null` is the
    /// totally directed walk.
    BtmScaling { alpha: f64, beta: Option<f64>, t_grid: Vec<f64> },
    /// `P[X_{rt} = X_t]` for each ratio `r = a/b`.
    BtmAging { alpha: f64, beta: Option<f64>, t: f64, ratios: Vec<f64> },
    /// Clock process against the stable law.
    BtmClock { alpha: f64, n: usize },
    /// Atoms are `(omega, probability)`.
    RwreSpeed { atoms: Vec<(f64, f64)> },
    RwreHitting { atoms: Vec<(f64, f64)>, levels: Vec<usize> },
    /// One speed curve per pmf.
    GwSpeedCurve { pmfs: Vec<Vec<f64>>, betas: Vec<f64> },
    GwHitting { pmf: Vec<f64>, beta: f64, levels: Vec<u32> },
    GwLattice { pmf: Vec<f64>, beta: f64, k_grid: Vec<u32>, lambdas: Vec<f64> },
    /// Height tail of trap trees; `harris` replaces `pmf` by its `h` law.
    GwTrapTail { pmf: Vec<f64>, harris: bool, max_n: u32 },
    GwAidekon { pmf: Vec<f64>, beta: f64, depth: u32, inner_trials: u32 },
    /// Speed at `beta = e^a / m` divided by `a`; exploratory.
    GwEinstein { pmf: Vec<f64>, a_grid: Vec<f64> },
    PercSpeed { d: usize, p: f64, direction: Vec<f64>, lambdas: Vec<f64>, levels: Vec<u32> },
    PercZeta { d: usize, p: f64, direction: Vec<f64>, n_max: u32 },
    IicAging { pmf: Vec<f64>, beta: f64, n: u32, exponents: Vec<f64>, profile: Vec<f64> },
    IicHeight { pmf: Vec<f64>, n_grid: Vec<u32> },
    IicDisplacement { pmf: Vec<f64>, beta: f64, grid: Vec<u64> },
}

impl Experiment {
    pub fn model(&self) -> ModelId {
        use Experiment::*;
        match self {
            BtmScaling { .. } | BtmAging { .. } | BtmClock { .. } => ModelId::Btm,
            RwreSpeed { .. } | RwreHitting { .. } => ModelId::Rwre1d,
            GwSpeedCurve { .. }
            | GwHitting { .. }
            | GwLattice { .. }
            | GwTrapTail { .. }
            | GwAidekon { .. }
            | GwEinstein { .. } => ModelId::Gwtree,
            PercSpeed { .. } | PercZeta { .. } => ModelId::Perc,
            IicAging { .. } | IicHeight { .. } | IicDisplacement { .. } => ModelId::Iic,
        }
    }

    /// Snake-case tag as written in the config.
    pub fn kind(&self) -> String {
        let v = serde_json::to_value(self).expect("experiments serialize");
        v["kind"].as_str().unwrap_or_default().to_string()
    }
}

/// Work limits. `workers` only sizes the thread pool and is never part of
/// the resolved config, since results do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_cap: Option<u64>,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelId,
    pub experiment: Experiment,
    pub budget: Budget,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical text of the resolved config: pretty JSON, LF endings, no
    /// worker count.
    pub fn resolved_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn steps(&self) -> Result<u64, CliError> {
        self.budget.steps.ok_or_else(|| CliError::Config("budget.steps is required for this experiment".into()))
    }

    pub fn step_cap(&self, default: u64) -> u64 {
        self.budget.step_cap.unwrap_or(default)
    }

    /// Schema checks that need more than types: the model id agrees with
    /// the experiment, pmfs sum to one within 1e-12, grids are sane.
    pub fn validate(&self) -> Result<(), CliError> {
        use Experiment::*;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.experiment.model() != self.model {
            return bad("model does not match the experiment kind");
        }
        if self.budget.replicas == 0 {
            return bad("budget.replicas must be positive");
        }
        if self.budget.workers == Some(0) {
            return bad("budget.workers must be positive");
        }
        let pmf_ok = |p: &[f64]| {
            !p.is_empty() && p.iter().all(|x| x.is_finite() && *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-12
        };
        let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0]);
        match &self.experiment {
            BtmScaling { t_grid, .. } if t_grid.len() < 3 || !increasing(t_grid) => bad("t_grid needs 3 increasing times"),
            BtmAging { ratios, .. } if ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) => bad("ratios must lie in (0, 1]"),
            RwreSpeed { atoms } | RwreHitting { atoms, .. }
                if !pmf_ok(&atoms.iter().map(|a| a.1).collect::<Vec<_>>()) =>
            {
                bad("site-law probabilities must sum to 1")
            }
            GwSpeedCurve { pmfs, betas } => {
                if pmfs.is_empty() || !pmfs.iter().all(|p| pmf_ok(p)) {
                    return bad("every pmf must be non-negative and sum to 1");
                }
                if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0)) {
                    return bad("betas must be positive");
                }
                Ok(())
            }
            GwHitting { pmf, .. }
            | GwLattice { pmf, .. }
            | GwTrapTail { pmf, .. }
            | GwAidekon { pmf, .. }
            | GwEinstein { pmf, .. }
            | IicAging { pmf, .. }
            | IicHeight { pmf, .. }
            | IicDisplacement { pmf, .. }
                if !pmf_ok(pmf) =>
            {
                bad("pmf must be non-negative and sum to 1")
            }
            PercSpeed { d, direction, .. } | PercZeta { d, direction, .. } if direction.len() != *d => {
                bad("direction must have d components")
            }
            _ => Ok(()),
        }
    }
}
