//! Dispatch from a config to the library and the tables it produces.
//!
//! Column orders (first row of every CSV) are part of the output contract:
//!
//! | kind | `results.csv` columns |
//! |------|-----------------------|
//! | btm_scaling | exponent, stderr, ci_lo, ci_hi, replicas |
//! | btm_aging | ratio, empirical, ci_lo, ci_hi, arcsine |
//! | btm_clock | alpha, n, ks |
//! | rwre_speed | n_steps, v, stderr, ci_lo, ci_hi, replicas |
//! | rwre_hitting | slope, stderr, ci_lo, ci_hi, target, incomplete |
//! | gw_speed_curve | pmf, beta, v, ci_lo, ci_hi, n_steps |
//! | gw_hitting | slope, stderr, ci_lo, ci_hi, target, incomplete |
//! | gw_lattice | lambda, k, n, median, q25, q75, count |
//! | gw_trap_tail | n, prob, ratio, ratio_se |
//! | gw_aidekon | v, ci_lo, ci_hi, samples, dropped |
//! | gw_einstein | a, beta, v, ci_lo, ci_hi, v_over_a |
//! | perc_speed | lambda, v, ci_lo, ci_hi, slope, slope_lo, slope_hi, exited, incomplete |
//! | perc_zeta | n, count, prob |
//! | iic_aging | a, b, prob, ci_lo, ci_hi, limit |
//! | iic_height | n, prob, ci_lo, ci_hi, scaled, ratio |
//! | iic_displacement | n, median |
//!
//! `iic_aging` also writes `profile.csv` (t, level, median, reached).
//!
//! Tree walks run on trees conditioned to survive (backbone plus traps).

use std::fmt::Display;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rwrelab::critical::{self, CriticalLaw, IicWalkConfig};
use rwrelab::estat::{self, EstimateReport};
use rwrelab::gwtree::{self, AidekonConfig, BiasSpec, OffspringLaw, TreeMode, TreeSpec, TREE_STEP_CAP};
use rwrelab::perc::{self, SpeedCurveConfig};
use rwrelab::rwre1d::{self, SiteLaw};
use rwrelab::trapmodel::{self, Bias, BtmSetup, TrapLaw};
use rwrelab::SeedTree;

use crate::config::{Experiment, ExperimentConfig};
use crate::table::{num, opt, Table};
use crate::CliError;

/// Seed path handed to a group of replicas: replica `i` uses `path/i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedGroup {
    pub label: String,
    pub path: String,
    pub replicas: usize,
}

/// Everything a run writes, before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// `(file name, table)`; the first one is `results.csv`.
    pub tables: Vec<(String, Table)>,
    pub summary: Value,
    pub partial: bool,
    pub seeds: Vec<SeedGroup>,
}

fn model<E: Display>(e: E) -> CliError {
    CliError::Model(e.to_string())
}

fn ci_row(r: &EstimateReport) -> [String; 3] {
    [num(r.estimate), num(r.ci_lo), num(r.ci_hi)]
}

fn pmf_label(pmf: &[f64]) -> String {
    pmf.iter().map(|p| num(*p)).collect::<Vec<_>>().join(" ")
}

fn group(label: impl Into<String>, seed: &SeedTree, replicas: usize) -> SeedGroup {
    SeedGroup { label: label.into(), path: seed.to_string(), replicas }
}

fn btm_setup(alpha: f64, beta: Option<f64>) -> Result<BtmSetup, CliError> {
    Ok(BtmSetup {
        law: TrapLaw::pareto(alpha).map_err(model)?,
        bias: Bias::new(beta.unwrap_or(f64::INFINITY)).map_err(model)?,
    })
}

fn slope_table(r: &EstimateReport, target: Option<f64>, incomplete: usize) -> Table {
    let mut t = Table::new(&["slope", "stderr", "ci_lo", "ci_hi", "target", "incomplete"]);
    t.push(vec![num(r.estimate), num(r.stderr), num(r.ci_lo), num(r.ci_hi), opt(target), incomplete.to_string()]);
    t
}

fn results(table: Table, summary: Value, partial: bool, seeds: Vec<SeedGroup>) -> Outcome {
    Outcome { tables: vec![("results.csv".to_string(), table)], summary, partial, seeds }
}

/// Runs the experiment on the current rayon pool.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let root = SeedTree::new(cfg.seed);
    let replicas = cfg.budget.replicas;
    match &cfg.experiment {
        Experiment::BtmScaling { alpha, beta, t_grid } => {
            let setup = btm_setup(*alpha, *beta)?;
            let est = trapmodel::scaling_exponent_btm(&setup, t_grid, replicas, &root).map_err(model)?;
            let r = &est.report;
            let mut t = Table::new(&["exponent", "stderr", "ci_lo", "ci_hi", "replicas"]);
            t.push(vec![num(r.estimate), num(r.stderr), num(r.ci_lo), num(r.ci_hi), r.replicas.to_string()]);
            let seeds = vec![group("btm replicas", &root.child(0), replicas)];
            Ok(results(t, json!({ "estimate": est, "target": alpha }), false, seeds))
        }
        Experiment::BtmAging { alpha, beta, t, ratios } => {
            let setup = btm_setup(*alpha, *beta)?;
            let mut table = Table::new(&["ratio", "empirical", "ci_lo", "ci_hi", "arcsine"]);
            let mut seeds = Vec::new();
            let mut gap: f64 = 0.0;
            for (i, &r) in ratios.iter().enumerate() {
                let s = root.child(i as u64);
                let est = trapmodel::aging_probability(&setup, r, 1.0, *t, replicas, &s).map_err(model)?;
                let [e, lo, hi] = ci_row(&est.report);
                if let Some(a) = est.arcsine {
                    gap = gap.max((est.report.estimate - a).abs());
                }
                table.push(vec![num(r), e, lo, hi, opt(est.arcsine)]);
                seeds.push(group(format!("ratio {r}"), &s, replicas));
            }
            Ok(results(table, json!({ "max_gap": gap }), false, seeds))
        }
        Experiment::BtmClock { alpha, n } => {
            let law = TrapLaw::pareto(*alpha).map_err(model)?;
            let ks = trapmodel::clock_vs_stable(&law, *alpha, *n, replicas, &root).map_err(model)?;
            let mut t = Table::new(&["alpha", "n", "ks"]);
            t.push(vec![num(*alpha), n.to_string(), num(ks)]);
            let seeds = vec![group("clocks", &root.child(0), replicas)];
            Ok(results(t, json!({ "ks": ks }), false, seeds))
        }
        Experiment::RwreSpeed { atoms } => {
            let law = SiteLaw::new(atoms.clone()).map_err(model)?;
            let steps = cfg.steps()?;
            let r = rwre1d::speed_estimate(&law, steps, replicas, &root).map_err(model)?;
            let mut t = Table::new(&["n_steps", "v", "stderr", "ci_lo", "ci_hi", "replicas"]);
            t.push(vec![steps.to_string(), num(r.estimate), num(r.stderr), num(r.ci_lo), num(r.ci_hi), r.replicas.to_string()]);
            let summary = json!({
                "regime": format!("{:?}", rwre1d::classify_regime(&law)),
                "mean_rho": law.mean_rho(),
                "speed": r,
            });
            Ok(results(t, summary, false, vec![group("environments", &root, replicas)]))
        }
        Experiment::RwreHitting { atoms, levels } => {
            let law = SiteLaw::new(atoms.clone()).map_err(model)?;
            let h = rwre1d::hitting_exponent(&law, levels, replicas, &root).map_err(model)?;
            let target = rwre1d::kks_alpha(&law).map_err(model)?.map(|a| 1.0 / a);
            let t = slope_table(&h.report, target, h.incomplete);
            let partial = h.incomplete > 0;
            Ok(results(t, json!({ "estimate": h }), partial, vec![group("walks", &root.child(0), replicas)]))
        }
        Experiment::GwSpeedCurve { pmfs, betas } => {
            let steps = cfg.steps()?;
            let mut table = Table::new(&["pmf", "beta", "v", "ci_lo", "ci_hi", "n_steps"]);
            let mut seeds = Vec::new();
            let mut capped = 0;
            for (pi, pmf) in pmfs.iter().enumerate() {
                let law = OffspringLaw::new(pmf.clone()).map_err(model)?;
                let spec = TreeSpec::new(law, TreeMode::Harris);
                for (bi, &beta) in betas.iter().enumerate() {
                    let s = root.child(pi as u64).child(bi as u64);
                    let est = gwtree::speed_estimate(&spec, &BiasSpec::fixed(beta).map_err(model)?, steps, replicas, &s)
                        .map_err(model)?;
                    capped += est.capped;
                    let [v, lo, hi] = ci_row(&est.report);
                    table.push(vec![pmf_label(pmf), num(beta), v, lo, hi, steps.to_string()]);
                    seeds.push(group(format!("pmf {pi} beta {beta}"), &s, replicas));
                }
            }
            Ok(results(table, json!({ "capped": capped }), capped > 0, seeds))
        }
        Experiment::GwHitting { pmf, beta, levels } => {
            let spec = TreeSpec::new(OffspringLaw::new(pmf.clone()).map_err(model)?, TreeMode::Harris);
            let bias = BiasSpec::fixed(*beta).map_err(model)?;
            let cap = cfg.step_cap(TREE_STEP_CAP);
            let h = gwtree::hitting_exponent_tree(&spec, &bias, levels, replicas, cap, &root).map_err(model)?;
            let t = slope_table(&h.report, h.target, h.incomplete);
            let partial = h.incomplete > 0;
            Ok(results(t, json!({ "estimate": h }), partial, vec![group("trees", &root.child(0), replicas)]))
        }
        Experiment::GwLattice { pmf, beta, k_grid, lambdas } => {
            let spec = TreeSpec::new(OffspringLaw::new(pmf.clone()).map_err(model)?, TreeMode::Harris);
            let cap = cfg.step_cap(TREE_STEP_CAP);
            let d = gwtree::lattice_diagnostic(&spec, *beta, k_grid, lambdas, replicas, cap, &root).map_err(model)?;
            let mut table = Table::new(&["lambda", "k", "n", "median", "q25", "q75", "count"]);
            for (i, lam) in d.lambdas.iter().enumerate() {
                for (j, k) in d.k_grid.iter().enumerate() {
                    let mut xs = d.samples[i][j].clone();
                    xs.sort_by(f64::total_cmp);
                    let q = |p| if xs.is_empty() { f64::NAN } else { estat::quantile_sorted(&xs, p) };
                    table.push(vec![
                        num(*lam),
                        k.to_string(),
                        d.levels[i][j].to_string(),
                        num(q(0.5)),
                        num(q(0.25)),
                        num(q(0.75)),
                        xs.len().to_string(),
                    ]);
                }
            }
            let summary = json!({
                "alpha": d.alpha,
                "cross_k_ks": d.cross_k_ks,
                "cross_lambda_ks": d.cross_lambda_ks,
                "incomplete": d.incomplete,
            });
            Ok(results(table, summary, d.incomplete > 0, vec![group("trees", &root, replicas)]))
        }
        Experiment::GwTrapTail { pmf, harris, max_n } => {
            let law = OffspringLaw::new(pmf.clone()).map_err(model)?;
            let trap = if *harris {
                gwtree::harris_split(&law)
                    .map_err(model)?
                    .h
                    .ok_or_else(|| CliError::Model("law has no leaves, so no trap law".into()))?
            } else {
                law
            };
            let tail = gwtree::trap_height_tail(&trap, *max_n, replicas, &root).map_err(model)?;
            let mut table = Table::new(&["n", "prob", "ratio", "ratio_se"]);
            for p in &tail {
                table.push(vec![p.n.to_string(), num(p.prob), num(p.ratio), num(p.ratio_se)]);
            }
            let summary = json!({ "trap_pmf": trap.pmf(), "f_prime_q": trap.mean() });
            Ok(results(table, summary, false, vec![group("levels", &root, replicas)]))
        }
        Experiment::GwAidekon { pmf, beta, depth, inner_trials } => {
            let law = OffspringLaw::new(pmf.clone()).map_err(model)?;
            let ac = AidekonConfig { depth: *depth, inner_trials: *inner_trials, samples: replicas, resamples: 1000 };
            let est = gwtree::aidekon_speed(&law, *beta, ac, &root).map_err(model)?;
            let mut t = Table::new(&["v", "ci_lo", "ci_hi", "samples", "dropped"]);
            let [v, lo, hi] = ci_row(&est.report);
            t.push(vec![v, lo, hi, replicas.to_string(), est.dropped_draws.to_string()]);
            let partial = est.stalled_trials > 0;
            Ok(results(t, json!({ "estimate": est }), partial, vec![group("samples", &root, replicas)]))
        }
        Experiment::GwEinstein { pmf, a_grid } => {
            let law = OffspringLaw::new(pmf.clone()).map_err(model)?;
            let m = law.mean();
            let spec = TreeSpec::new(law, TreeMode::Harris);
            let steps = cfg.steps()?;
            let mut table = Table::new(&["a", "beta", "v", "ci_lo", "ci_hi", "v_over_a"]);
            let mut seeds = Vec::new();
            let mut capped = 0;
            for (i, &a) in a_grid.iter().enumerate() {
                let beta = a.exp() / m;
                let s = root.child(i as u64);
                let est = gwtree::speed_estimate(&spec, &BiasSpec::fixed(beta).map_err(model)?, steps, replicas, &s)
                    .map_err(model)?;
                capped += est.capped;
                let [v, lo, hi] = ci_row(&est.report);
                table.push(vec![num(a), num(beta), v, lo, hi, num(est.report.estimate / a)]);
                seeds.push(group(format!("a {a}"), &s, replicas));
            }
            Ok(results(table, json!({ "exploratory": true }), capped > 0, seeds))
        }
        Experiment::PercSpeed { d, p, direction, lambdas, levels } => {
            let sc = SpeedCurveConfig {
                d: *d,
                p: *p,
                direction: direction.clone(),
                lambdas: lambdas.clone(),
                steps: cfg.steps()?,
                replicas,
                levels: levels.clone(),
                level_step_cap: cfg.step_cap(1_000_000_000),
            };
            let rows = perc::speed_curve(&sc, &root).map_err(model)?;
            let mut table =
                Table::new(&["lambda", "v", "ci_lo", "ci_hi", "slope", "slope_lo", "slope_hi", "exited", "incomplete"]);
            let mut seeds = Vec::new();
            for (i, r) in rows.iter().enumerate() {
                let sp = r.speed.as_ref();
                let sl = r.hitting_slope.as_ref();
                table.push(vec![
                    num(r.lambda),
                    opt(sp.map(|x| x.estimate)),
                    opt(sp.map(|x| x.ci_lo)),
                    opt(sp.map(|x| x.ci_hi)),
                    opt(sl.map(|x| x.estimate)),
                    opt(sl.map(|x| x.ci_lo)),
                    opt(sl.map(|x| x.ci_hi)),
                    r.exited.to_string(),
                    r.incomplete.to_string(),
                ]);
                seeds.push(group(format!("lambda {}", r.lambda), &root.child(i as u64).child(0), replicas));
            }
            let partial = rows.iter().any(|r| r.incomplete > 0);
            Ok(results(table, json!({ "rows": rows }), partial, seeds))
        }
        Experiment::PercZeta { d, p, direction, n_max } => {
            let z = perc::zeta_estimate(*d, *p, direction, *n_max, replicas, None, &root).map_err(model)?;
            let mut table = Table::new(&["n", "count", "prob"]);
            for &(n, c, pr) in &z.tail {
                table.push(vec![n.to_string(), c.to_string(), num(pr)]);
            }
            Ok(results(table, json!({ "estimate": z }), false, vec![group("boxes", &root, replicas)]))
        }
        Experiment::IicAging { pmf, beta, n, exponents, profile } => {
            let law = CriticalLaw::from_pmf(pmf.clone()).map_err(model)?;
            let wc = IicWalkConfig {
                beta: *beta,
                n: *n,
                exponents: exponents.clone(),
                profile: profile.clone(),
                replicas,
                time_cap: 1e250,
            };
            let s = critical::biased_walk_iic(&law, &wc, &root).map_err(model)?;
            let mut table = Table::new(&["a", "b", "prob", "ci_lo", "ci_hi", "limit"]);
            for p in &s.aging {
                let [e, lo, hi] = ci_row(&p.prob);
                table.push(vec![num(p.a), num(p.b), e, lo, hi, num(p.a / p.b)]);
            }
            let mut prof = Table::new(&["t", "level", "median", "reached"]);
            for p in &s.profile {
                prof.push(vec![num(p.t), p.level.to_string(), num(p.median), p.reached.to_string()]);
            }
            let summary = json!({ "monotone": s.monotone, "partial": s.partial, "capped": s.capped });
            Ok(Outcome {
                tables: vec![("results.csv".into(), table), ("profile.csv".into(), prof)],
                summary,
                partial: s.partial + s.capped > 0,
                seeds: vec![group("iic walks", &root, replicas)],
            })
        }
        Experiment::IicHeight { pmf, n_grid } => {
            let law = CriticalLaw::from_pmf(pmf.clone()).map_err(model)?;
            let tail = critical::critical_height_tail(&law, n_grid, replicas, &root).map_err(model)?;
            let mut table = Table::new(&["n", "prob", "ci_lo", "ci_hi", "scaled", "ratio"]);
            for p in &tail {
                let [e, lo, hi] = ci_row(&p.prob);
                table.push(vec![p.n.to_string(), e, lo, hi, num(p.scaled), opt(p.ratio)]);
            }
            let summary = json!({ "asymptote_constant": law.height_constant() });
            Ok(results(table, summary, false, vec![group("trees", &root, replicas)]))
        }
        Experiment::IicDisplacement { pmf, beta, grid } => {
            let law = CriticalLaw::from_pmf(pmf.clone()).map_err(model)?;
            let d = critical::displacement_exponent(&law, *beta, grid, replicas, &root).map_err(model)?;
            let mut table = Table::new(&["n", "median"]);
            for (n, m) in d.grid.iter().zip(&d.medians) {
                table.push(vec![n.to_string(), num(*m)]);
            }
            let partial = d.capped > 0;
            Ok(results(table, json!({ "estimate": d }), partial, vec![group("walks", &root, replicas)]))
        }
    }
}
