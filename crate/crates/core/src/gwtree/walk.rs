use rand::Rng;
use serde::{Deserialize, Serialize};

use super::analytics::{alpha_tree, critical_bias, random_bias_alpha};
use super::arena::{NodeId, TreeArena, TreeSpec, ROOT};
use super::law::BiasSpec;
use super::GwError;
use crate::estat::{self, Centre, EstimateReport};
use crate::randkit::{self, SeedTree, Stream};
use crate::replicas::run_replicas;

/// Default step cap for level-based runs.
pub const STEP_CAP: u64 = 1_000_000_000;

/// Stop after `max_steps`, or earlier once depth `max_level` is reached.
/// Depth is sampled every `record_every` steps (0 disables sampling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeWalkBudget {
    pub max_steps: u64,
    pub max_level: Option<u32>,
    pub record_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeWalkRecord {
    /// Depth at steps `0, record_every, 2 record_every, ...`; the artificial
    /// parent of a randomly biased root has depth -1.
    pub depths: Vec<i32>,
    /// `hitting_times[n-1]` is the first time depth `n` is reached.
    pub hitting_times: Vec<u64>,
    pub root_visits: u64,
    pub steps: u64,
    pub final_depth: i32,
    /// False when `max_level` was set and not reached, or the tree hit its cap.
    pub complete: bool,
    pub capped: bool,
}

/// Where the walk can go from `u`, with probabilities. `None` is the
/// artificial parent of the root under random biases.
pub fn transition_weights(
    tree: &mut TreeArena,
    u: NodeId,
    bias: &BiasSpec,
) -> Result<Vec<(Option<NodeId>, f64)>, GwError> {
    let kids = tree.children(u)?;
    let k = kids.len() as f64;
    let mut out = Vec::with_capacity(kids.len() + 1);
    match bias {
        BiasSpec::Fixed(beta) => {
            if u == ROOT {
                if kids.is_empty() {
                    out.push((Some(ROOT), 1.0));
                }
                out.extend(kids.map(|c| (Some(c), 1.0 / k)));
            } else {
                let z = 1.0 + beta * k;
                out.push((tree.parent(u), 1.0 / z));
                out.extend(kids.map(|c| (Some(c), beta / z)));
            }
        }
        BiasSpec::Random(_) => {
            let z = 1.0 + kids.clone().map(|c| tree.edge_bias(c)).sum::<f64>();
            out.push((tree.parent(u), 1.0 / z));
            out.extend(kids.map(|c| (Some(c), tree.edge_bias(c) / z)));
        }
    }
    Ok(out)
}

/// Run the walk from the root. A random bias needs a tree built with an edge
/// law; the artificial parent below the root always steps back to the root.
pub fn simulate_tree_walk(
    tree: &mut TreeArena,
    bias: &BiasSpec,
    budget: TreeWalkBudget,
    rng: &mut Stream,
) -> Result<TreeWalkRecord, GwError> {
    if matches!(bias, BiasSpec::Random(_)) && !tree.has_edge_biases() {
        return Err(GwError::Argument("random bias needs a tree with edge biases"));
    }
    let beta = match bias {
        BiasSpec::Fixed(b) => Some(*b),
        BiasSpec::Random(_) => None,
    };
    let mut rec = TreeWalkRecord {
        depths: Vec::new(),
        hitting_times: Vec::new(),
        root_visits: 0,
        steps: 0,
        final_depth: 0,
        complete: true,
        capped: false,
    };
    // None is the artificial parent
    let mut at: Option<NodeId> = Some(ROOT);
    let mut depth: i32 = 0;
    let mut t = 0u64;
    loop {
        if budget.record_every > 0 && t.is_multiple_of(budget.record_every) {
            rec.depths.push(depth);
        }
        if budget.max_level.is_some_and(|l| depth >= l as i32) || t >= budget.max_steps {
            break;
        }
        let next = match at {
            None => Some(ROOT),
            Some(u) => {
                let kids = match tree.children(u) {
                    Ok(k) => k,
                    Err(GwError::NodeCap(_)) => {
                        rec.capped = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let k = kids.len() as u32;
                let x: f64 = rng.random();
                match beta {
                    Some(_) if u == ROOT => {
                        if k == 0 {
                            Some(ROOT)
                        } else {
                            Some(kids.start + ((x * k as f64) as u32).min(k - 1))
                        }
                    }
                    Some(b) => {
                        let z = 1.0 + b * k as f64;
                        let y = x * z;
                        if y < 1.0 {
                            tree.parent(u)
                        } else {
                            Some(kids.start + (((y - 1.0) / b) as u32).min(k - 1))
                        }
                    }
                    None => {
                        let z = 1.0 + kids.clone().map(|c| tree.edge_bias(c)).sum::<f64>();
                        let mut y = x * z - 1.0;
                        if y < 0.0 {
                            tree.parent(u)
                        } else {
                            let mut pick = kids.end - 1;
                            for c in kids {
                                y -= tree.edge_bias(c);
                                if y < 0.0 {
                                    pick = c;
                                    break;
                                }
                            }
                            Some(pick)
                        }
                    }
                }
            }
        };
        t += 1;
        at = next;
        depth = at.map_or(-1, |v| tree.depth(v) as i32);
        if at == Some(ROOT) {
            rec.root_visits += 1;
        }
        if depth > rec.hitting_times.len() as i32 {
            rec.hitting_times.push(t);
        }
    }
    rec.steps = t;
    rec.final_depth = depth;
    rec.complete = !rec.capped && budget.max_level.is_none_or(|l| depth >= l as i32);
    Ok(rec)
}

/// Ballistic speed `|X_n|/n` averaged over replicas, each on its own tree,
/// after discarding the first tenth of the steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub report: EstimateReport,
    pub capped: usize,
}

pub fn speed_estimate(
    spec: &TreeSpec,
    bias: &BiasSpec,
    steps: u64,
    replicas: usize,
    seed: &SeedTree,
) -> Result<SpeedEstimate, GwError> {
    if steps < 10 {
        return Err(GwError::Argument("need at least 10 steps"));
    }
    let burn = steps / 10;
    let runs = run_replicas(seed, replicas, |_, s| -> Result<(f64, bool), GwError> {
        let mut tree = spec.build(&s.child(0))?;
        let budget = TreeWalkBudget { max_steps: steps, max_level: None, record_every: burn };
        let rec = simulate_tree_walk(&mut tree, bias, budget, &mut s.child(1).stream())?;
        let start = rec.depths.get(1).copied().unwrap_or(0);
        let span = rec.steps.saturating_sub(burn).max(1);
        Ok(((rec.final_depth - start) as f64 / span as f64, rec.capped))
    });
    let runs: Vec<(f64, bool)> = runs.into_iter().collect::<Result<_, _>>()?;
    let speeds: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let capped = runs.iter().filter(|r| r.1).count();
    Ok(SpeedEstimate { report: estat::mean_report(&speeds, "tree-speed")?.with_seed(seed), capped })
}

/// Slope of `ln median Delta_n` against `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeHittingExponent {
    pub report: EstimateReport,
    /// `1/alpha` when the bias is fixed and above `beta_c`.
    pub target: Option<f64>,
    pub incomplete: usize,
}

/// Hitting times of every level up to `top`; missing levels set to `cap`.
fn hitting_rows(
    spec: &TreeSpec,
    bias: &BiasSpec,
    top: u32,
    replicas: usize,
    step_cap: u64,
    seed: &SeedTree,
) -> Result<Vec<(Vec<u64>, bool)>, GwError> {
    let runs = run_replicas(seed, replicas, |_, s| -> Result<(Vec<u64>, bool), GwError> {
        let mut tree = spec.build(&s.child(0))?;
        let budget = TreeWalkBudget { max_steps: step_cap, max_level: Some(top), record_every: 0 };
        let rec = simulate_tree_walk(&mut tree, bias, budget, &mut s.child(1).stream())?;
        let mut times = rec.hitting_times;
        times.resize(top as usize, step_cap);
        Ok((times, rec.complete))
    });
    runs.into_iter().collect()
}

pub fn hitting_exponent_tree(
    spec: &TreeSpec,
    bias: &BiasSpec,
    levels: &[u32],
    replicas: usize,
    step_cap: u64,
    seed: &SeedTree,
) -> Result<TreeHittingExponent, GwError> {
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels.first().is_none_or(|&l| l == 0) {
        return Err(GwError::Argument("levels must be positive and increasing"));
    }
    let top = *levels.last().unwrap_or(&1);
    let runs = hitting_rows(spec, bias, top, replicas, step_cap, &seed.child(0))?;
    let incomplete = runs.iter().filter(|r| !r.1).count();
    let rows: Vec<Vec<f64>> = runs
        .iter()
        .map(|(times, _)| levels.iter().map(|&l| times[l as usize - 1] as f64).collect())
        .collect();
    let grid: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let report = estat::loglog_slope_replicas(&grid, &rows, Centre::Median, 1000, &seed.child(1))?;
    let target = match bias {
        BiasSpec::Fixed(b) if critical_bias(&spec.law).is_some_and(|c| *b > c) => {
            alpha_tree(&spec.law, *b).ok().map(|a| 1.0 / a)
        }
        _ => None,
    };
    Ok(TreeHittingExponent { report, target, incomplete })
}

/// Rescaled hitting times `Delta_n / n^{1/alpha}` along `n_lambda(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDiagnostic {
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    pub k_grid: Vec<u32>,
    /// `levels[i][j] = n_{lambda_i}(k_j)`.
    pub levels: Vec<Vec<u32>>,
    /// `samples[i][j]` holds one value per complete replica.
    pub samples: Vec<Vec<Vec<f64>>>,
    /// KS between consecutive `k` for each `lambda`.
    pub cross_k_ks: Vec<Vec<f64>>,
    /// KS between `lambdas[0]` and `lambdas[i]` at each `k`, `i >= 1`.
    pub cross_lambda_ks: Vec<Vec<f64>>,
    pub incomplete: usize,
}

pub fn lattice_diagnostic(
    spec: &TreeSpec,
    beta: f64,
    k_grid: &[u32],
    lambdas: &[f64],
    replicas: usize,
    step_cap: u64,
    seed: &SeedTree,
) -> Result<LatticeDiagnostic, GwError> {
    let beta_c = critical_bias(&spec.law).ok_or(GwError::Leafless)?;
    if !(beta > beta_c) {
        return Err(GwError::Bias(beta));
    }
    if k_grid.is_empty() || lambdas.is_empty() || lambdas.iter().any(|&l| !(l >= 1.0)) {
        return Err(GwError::Argument("need k values and lambdas >= 1"));
    }
    let alpha = alpha_tree(&spec.law, beta)?;
    let levels: Vec<Vec<u32>> = lambdas
        .iter()
        .map(|&lam| k_grid.iter().map(|&k| (lam * beta_c.powi(k as i32)).floor().max(1.0) as u32).collect())
        .collect();
    let top = levels.iter().flatten().copied().max().unwrap_or(1);
    let runs = hitting_rows(spec, &BiasSpec::fixed(beta)?, top, replicas, step_cap, seed)?;
    let done: Vec<&Vec<u64>> = runs.iter().filter(|r| r.1).map(|r| &r.0).collect();
    let samples: Vec<Vec<Vec<f64>>> = levels
        .iter()
        .map(|row| {
            row.iter()
                .map(|&n| {
                    let scale = (n as f64).powf(1.0 / alpha);
                    done.iter().map(|t| t[n as usize - 1] as f64 / scale).collect()
                })
                .collect()
        })
        .collect();
    let cross_k_ks = samples
        .iter()
        .map(|per_k| per_k.windows(2).map(|w| estat::ks_two_sample(&w[0], &w[1])).collect())
        .collect();
    let cross_lambda_ks = (0..k_grid.len())
        .map(|j| samples.iter().skip(1).map(|s| estat::ks_two_sample(&samples[0][j], &s[j])).collect())
        .collect();
    Ok(LatticeDiagnostic {
        alpha,
        lambdas: lambdas.to_vec(),
        k_grid: k_grid.to_vec(),
        levels,
        samples,
        cross_k_ks,
        cross_lambda_ks,
        incomplete: runs.len() - done.len(),
    })
}

/// KS distance between median-normalized `Delta_n` under random edge biases
/// and median-normalized completely asymmetric stable draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableFit {
    pub ks: f64,
    pub alpha: f64,
    pub lattice_span: Option<f64>,
    pub incomplete: usize,
}

pub fn random_bias_stable_ks(
    spec: &TreeSpec,
    n: u32,
    replicas: usize,
    step_cap: u64,
    seed: &SeedTree,
) -> Result<StableFit, GwError> {
    let nu = spec.edge_law.clone().ok_or(GwError::Argument("tree spec needs an edge law"))?;
    let ra = random_bias_alpha(&spec.law, &nu)?;
    if !(ra.alpha < 1.0) {
        return Err(GwError::Argument("stable comparison needs alpha < 1"));
    }
    let runs = hitting_rows(spec, &BiasSpec::random(nu)?, n, replicas, step_cap, &seed.child(0))?;
    let incomplete = runs.iter().filter(|r| !r.1).count();
    let deltas: Vec<f64> = runs.iter().map(|r| r.0[n as usize - 1] as f64).collect();
    let mut rng = seed.child(1).stream();
    let reference: Vec<f64> = (0..replicas.max(1000))
        .map(|_| randkit::sample_stable_ca(ra.alpha, &mut rng))
        .collect::<Result<_, _>>()?;
    let ks = estat::ks_two_sample(&estat::median_normalized(&deltas), &estat::median_normalized(&reference));
    Ok(StableFit { ks, alpha: ra.alpha, lattice_span: ra.lattice_span, incomplete })
}
