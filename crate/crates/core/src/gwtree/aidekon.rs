use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arena::{gen_tree, TreeArena, TreeMode, ROOT};
use super::law::OffspringLaw;
use super::GwError;
use crate::estat::{self, EstimateReport};
use crate::randkit::{SeedTree, Stream};
use crate::replicas::run_replicas;

/// Steps allowed for one escape trial before it counts as a return.
const TRIAL_STEP_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AidekonConfig {
    /// Depth that counts as escape.
    pub depth: u32,
    /// Walks per escape-probability estimate.
    pub inner_trials: u32,
    /// Independent draws of `(Z, E^(0..=Z))`.
    pub samples: usize,
    pub resamples: usize,
}

impl Default for AidekonConfig {
    fn default() -> Self {
        Self { depth: 40, inner_trials: 1000, samples: 2000, resamples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AidekonEstimate {
    pub report: EstimateReport,
    /// Fewer than 100 inner trials per escape estimate.
    pub undersampled: bool,
    /// Trials stopped by the per-trial step cap.
    pub stalled_trials: u64,
    /// Draws whose estimated denominator `1/beta - 1 + sum E` was not
    /// positive. The exact value is positive; noisy escape estimates near
    /// `1 - 1/beta` can cross zero when `beta > 1`.
    pub dropped_draws: usize,
}

/// Fraction of `trials` walks from the root of `tree` that reach depth
/// `depth` without coming back to the root. The root steps to a uniform
/// child; a childless root never escapes. Returns `(estimate, stalled)`.
pub fn escape_probability(tree: &mut TreeArena, beta: f64, depth: u32, trials: u32, rng: &mut Stream) -> Result<(f64, u64), GwError> {
    let first = tree.children(ROOT)?;
    if first.is_empty() || trials == 0 {
        return Ok((0.0, 0));
    }
    let k0 = first.len() as u32;
    let mut escapes = 0u32;
    let mut stalled = 0u64;
    for _ in 0..trials {
        let mut u = first.start + rng.random_range(0..k0);
        let mut steps = 0u64;
        loop {
            if tree.depth(u) >= depth {
                escapes += 1;
                break;
            }
            if steps >= TRIAL_STEP_CAP {
                stalled += 1;
                break;
            }
            steps += 1;
            let kids = tree.children(u)?;
            let z = 1.0 + beta * kids.len() as f64;
            let y = rng.random::<f64>() * z;
            if y < 1.0 {
                u = tree.parent(u).unwrap_or(ROOT);
                if u == ROOT {
                    break;
                }
            } else {
                u = kids.start + (((y - 1.0) / beta) as u32).min(kids.len() as u32 - 1);
            }
        }
    }
    Ok((escapes as f64 / trials as f64, stalled))
}

/// Monte Carlo of the ratio-of-expectations speed formula, with the escape
/// probabilities replaced by their depth-`D` proxies.
pub fn aidekon_speed(law: &OffspringLaw, beta: f64, cfg: AidekonConfig, seed: &SeedTree) -> Result<AidekonEstimate, GwError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(GwError::Bias(beta));
    }
    if !law.is_supercritical() {
        return Err(GwError::NotSupercritical(law.mean()));
    }
    if cfg.samples < 2 || cfg.depth == 0 {
        return Err(GwError::Argument("need at least 2 samples and a positive depth"));
    }
    let inv = 1.0 / beta;
    let draws = run_replicas(&seed.child(0), cfg.samples, |_, s| -> Result<(f64, f64, u64), GwError> {
        let mut rng = s.child(0).stream();
        let z = law.sample(&mut rng);
        let mut escapes = Vec::with_capacity(z + 1);
        let mut stalled = 0;
        for i in 0..=z {
            let node = s.child(1 + i as u64);
            let mut tree = gen_tree(law, TreeMode::Plain, node.child(0).stream())?;
            let (e, st) = escape_probability(&mut tree, beta, cfg.depth, cfg.inner_trials, &mut node.child(1).stream())?;
            escapes.push(e);
            stalled += st;
        }
        let e0 = escapes[0];
        if e0 == 0.0 {
            return Ok((0.0, 0.0, stalled));
        }
        let denom = inv - 1.0 + escapes.iter().sum::<f64>();
        if denom <= 0.0 {
            // only reachable through sampling noise when beta > 1
            return Ok((f64::NAN, f64::NAN, stalled));
        }
        let w = e0 / denom;
        Ok(((z as f64 - inv) * w, (z as f64 + inv) * w, stalled))
    });
    let mut draws: Vec<(f64, f64, u64)> = draws.into_iter().collect::<Result<_, _>>()?;
    let stalled_trials = draws.iter().map(|d| d.2).sum();
    let before = draws.len();
    draws.retain(|d| !d.0.is_nan());
    let dropped_draws = before - draws.len();
    let ratio = |pick: &mut dyn Iterator<Item = usize>| {
        let (mut n, mut d) = (0.0, 0.0);
        for j in pick {
            n += draws[j].0;
            d += draws[j].1;
        }
        n / d
    };
    let estimate = ratio(&mut (0..draws.len()));
    let mut rng = seed.child(1).stream();
    let mut boots: Vec<f64> = (0..cfg.resamples)
        .map(|_| ratio(&mut (0..draws.len()).map(|_| rng.random_range(0..draws.len()))))
        .filter(|v| v.is_finite())
        .collect();
    boots.sort_by(f64::total_cmp);
    let report = EstimateReport {
        estimate,
        stderr: estat::variance(&boots).sqrt(),
        ci_lo: estat::quantile_sorted(&boots, 0.025),
        ci_hi: estat::quantile_sorted(&boots, 0.975),
        replicas: draws.len(),
        seed: None,
        method: "aidekon-ratio".into(),
    }
    .with_seed(seed);
    Ok(AidekonEstimate {
        report,
        undersampled: cfg.inner_trials < 100,
        stalled_trials,
        dropped_draws,
    })
}
