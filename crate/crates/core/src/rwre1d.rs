//! Nearest-neighbour random walk in an i.i.d. random environment on Z.
//!
//! At site `x` the walk steps right with probability `omega_x`. With
//! `rho_x = (1 - omega_x) / omega_x` the potential is `V(0) = 0`,
//! `V(x) - V(x - 1) = ln rho_x`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estat::{self, Centre, EstimateReport};
use crate::randkit::{self, SeedTree, Stream};
use crate::replicas::run_replicas;

/// Hard cap on steps for a single walk.
pub const STEP_CAP: u64 = 1_000_000_000;

const RECURRENCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RwreError {
    #[error("site law needs at least one atom")]
    Empty,
    #[error("atom {0} outside (0, 1)")]
    Atom(f64),
    #[error("probabilities must be non-negative and sum to 1, got sum {0}")]
    Weights(f64),
    #[error("walk is not transient to the right (E ln rho = {0})")]
    NotRightTransient(f64),
    #[error("invalid argument: {0}")]
    Argument(&'static str),
    #[error(transparent)]
    Stat(#[from] estat::StatError),
    #[error(transparent)]
    Rand(#[from] randkit::RandError),
}

/// Finite law of `omega_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteLaw {
    atoms: Vec<(f64, f64)>,
}

impl SiteLaw {
    /// Atoms as `(omega, probability)`.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, RwreError> {
        if atoms.is_empty() {
            return Err(RwreError::Empty);
        }
        let mut total = 0.0;
        for &(w, p) in &atoms {
            if !(w > 0.0 && w < 1.0) {
                return Err(RwreError::Atom(w));
            }
            if !(p >= 0.0) {
                return Err(RwreError::Weights(p));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(RwreError::Weights(total));
        }
        Ok(Self { atoms })
    }

    /// Atoms given as `(rho, probability)`.
    pub fn from_rho(atoms: &[(f64, f64)]) -> Result<Self, RwreError> {
        Self::new(atoms.iter().map(|&(r, p)| (1.0 / (1.0 + r), p)).collect())
    }

    pub fn constant(omega: f64) -> Result<Self, RwreError> {
        Self::new(vec![(omega, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    fn rho_atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().map(|&(w, p)| ((1.0 - w) / w, p))
    }

    pub fn mean_log_rho(&self) -> f64 {
        self.rho_atoms().map(|(r, p)| p * r.ln()).sum()
    }

    pub fn mean_rho(&self) -> f64 {
        self.rho_moment(1.0)
    }

    /// `E[rho^t]`.
    pub fn rho_moment(&self, t: f64) -> f64 {
        self.rho_atoms().map(|(r, p)| p * r.powf(t)).sum()
    }

    /// Law of the reflected environment `omega -> 1 - omega`.
    pub fn mirrored(&self) -> Self {
        Self { atoms: self.atoms.iter().map(|&(w, p)| (1.0 - w, p)).collect() }
    }

    fn sample(&self, rng: &mut Stream) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(w, p) in &self.atoms {
            acc += p;
            if u < acc {
                return w;
            }
        }
        self.atoms.last().map(|a| a.0).unwrap_or(0.5)
    }

    /// Span `d` when every nonzero `ln rho` atom lies in `d Z`; see
    /// [`randkit::log_lattice_span`].
    pub fn lattice_span(&self) -> Option<f64> {
        let logs: Vec<f64> = self.rho_atoms().filter(|&(_, p)| p > 0.0).map(|(r, _)| r.ln()).collect();
        randkit::log_lattice_span(&logs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Right,
    Left,
}

/// Solomon's trichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    Recurrent,
    ZeroSpeed { direction: Direction },
    Ballistic { direction: Direction, speed: f64 },
}

/// Classifies the walk; a law drifting left is mirrored and reported as such.
pub fn classify_regime(law: &SiteLaw) -> Regime {
    let drift = law.mean_log_rho();
    if drift.abs() < RECURRENCE_TOL {
        return Regime::Recurrent;
    }
    let (direction, right) = if drift < 0.0 {
        (Direction::Right, law.clone())
    } else {
        (Direction::Left, law.mirrored())
    };
    let m = right.mean_rho();
    if m >= 1.0 {
        Regime::ZeroSpeed { direction }
    } else {
        Regime::Ballistic { direction, speed: (1.0 - m) / (1.0 + m) }
    }
}

/// Positive root of `E[rho^t] = 1`, or `None` when every atom has `rho <= 1`.
pub fn kks_alpha(law: &SiteLaw) -> Result<Option<f64>, RwreError> {
    let drift = law.mean_log_rho();
    if drift >= 0.0 {
        return Err(RwreError::NotRightTransient(drift));
    }
    if law.rho_atoms().all(|(r, p)| r <= 1.0 || p == 0.0) {
        return Ok(None);
    }
    let f = |t: f64| law.rho_moment(t) - 1.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    // E[rho^t] dips below 1 right after 0; the root is the unique crossing
    while hi - lo > 1e-15 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// A two-sided environment grown on demand. Each side has its own stream so
/// the sites do not depend on the order of discovery.
#[derive(Debug, Clone)]
pub struct Env1D {
    law: SiteLaw,
    // thresholds scaled to 2^32 for fast Bernoulli draws, indexed x and -x-1
    right: Vec<u64>,
    left: Vec<u64>,
    right_omega: Vec<f64>,
    left_omega: Vec<f64>,
    right_rng: Stream,
    left_rng: Stream,
}

impl Env1D {
    pub fn new(law: SiteLaw, seed: &SeedTree) -> Self {
        Self {
            law,
            right: Vec::new(),
            left: Vec::new(),
            right_omega: Vec::new(),
            left_omega: Vec::new(),
            right_rng: seed.child(0).stream(),
            left_rng: seed.child(1).stream(),
        }
    }

    pub fn law(&self) -> &SiteLaw {
        &self.law
    }

    fn grow(&mut self, x: i64) {
        let (omegas, thr, rng, idx) = if x >= 0 {
            (&mut self.right_omega, &mut self.right, &mut self.right_rng, x as usize)
        } else {
            (&mut self.left_omega, &mut self.left, &mut self.left_rng, (-x - 1) as usize)
        };
        while omegas.len() <= idx {
            let w = self.law.sample(rng);
            omegas.push(w);
            thr.push((w * 4_294_967_296.0) as u64);
        }
    }

    #[inline]
    fn threshold(&mut self, x: i64) -> u64 {
        if x >= 0 {
            if let Some(&t) = self.right.get(x as usize) {
                return t;
            }
        } else if let Some(&t) = self.left.get((-x - 1) as usize) {
            return t;
        }
        self.grow(x);
        self.threshold(x)
    }

    pub fn omega(&mut self, x: i64) -> f64 {
        self.grow(x);
        if x >= 0 { self.right_omega[x as usize] } else { self.left_omega[(-x - 1) as usize] }
    }

    pub fn rho(&mut self, x: i64) -> f64 {
        let w = self.omega(x);
        (1.0 - w) / w
    }

    /// `V(x)`, summing `ln rho` between 1 and `x` (or `x + 1` and 0).
    pub fn potential(&mut self, x: i64) -> f64 {
        if x >= 0 {
            (1..=x).map(|i| self.rho(i).ln()).sum()
        } else {
            -(x + 1..=0).map(|i| self.rho(i).ln()).sum::<f64>()
        }
    }

    /// `V` on `lo..=hi` in one pass.
    pub fn potential_range(&mut self, lo: i64, hi: i64) -> Vec<f64> {
        let mut out = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        let mut v = self.potential(lo);
        out.push(v);
        for x in lo + 1..=hi {
            v += self.rho(x).ln();
            out.push(v);
        }
        out
    }

    /// Number of generated sites.
    pub fn generated(&self) -> usize {
        self.right.len() + self.left.len()
    }
}

#[inline]
fn step(env: &mut Env1D, x: i64, rng: &mut Stream) -> i64 {
    if (rng.next_u32() as u64) < env.threshold(x) { x + 1 } else { x - 1 }
}

/// Position after `n_steps`.
pub fn walk_position(env: &mut Env1D, n_steps: u64, rng: &mut Stream) -> i64 {
    let mut x = 0;
    for _ in 0..n_steps {
        x = step(env, x, rng);
    }
    x
}

/// Positions at each time of an increasing integer grid.
pub fn walk_positions_at(env: &mut Env1D, times: &[u64], rng: &mut Stream) -> Vec<i64> {
    let mut x = 0;
    let mut t = 0u64;
    times
        .iter()
        .map(|&target| {
            while t < target {
                x = step(env, x, rng);
                t += 1;
            }
            x
        })
        .collect()
}

/// First hitting times of levels `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub hitting_times: Vec<u64>,
    pub steps: u64,
    pub complete: bool,
}

pub fn simulate_rwre(env: &mut Env1D, n_levels: usize, step_cap: u64, rng: &mut Stream) -> WalkRecord {
    let mut hitting_times = Vec::with_capacity(n_levels);
    let (mut x, mut steps) = (0i64, 0u64);
    while hitting_times.len() < n_levels && steps < step_cap {
        x = step(env, x, rng);
        steps += 1;
        if x as usize > hitting_times.len() && x > 0 {
            hitting_times.push(steps);
        }
    }
    WalkRecord { complete: hitting_times.len() == n_levels, hitting_times, steps }
}

/// A stretch between two strict descending ladder epochs of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valley {
    pub start: i64,
    pub end: i64,
    /// Highest climb above `V(start)` before `V` drops below it.
    pub height: f64,
}

/// Completed valleys of `V` on the window `[from, from + len)`.
pub fn potential_valleys(env: &mut Env1D, from: i64, len: usize) -> Vec<Valley> {
    // V is tracked relative to the current valley floor so that returns to the
    // same lattice level are not mistaken for new minima through rounding
    const TOL: f64 = 1e-9;
    let mut out = Vec::new();
    let mut start = from;
    let (mut rel, mut top) = (0.0f64, 0.0f64);
    for x in from + 1..from + len as i64 {
        rel += env.rho(x).ln();
        if rel < -TOL {
            out.push(Valley { start, end: x, height: top });
            start = x;
            rel = 0.0;
            top = 0.0;
        } else {
            top = top.max(rel);
        }
    }
    out
}

/// `(n, P[H >= n unit])` for `n = 0..=max_n`. Heights within `1e-6` units
/// below a multiple count as reaching it.
pub fn height_tail(valleys: &[Valley], unit: f64, max_n: usize) -> Vec<(usize, f64)> {
    let total = valleys.len().max(1) as f64;
    let levels: Vec<i64> = valleys.iter().map(|v| (v.height / unit + 1e-6).floor() as i64).collect();
    (0..=max_n)
        .map(|n| (n, levels.iter().filter(|&&h| h >= n as i64).count() as f64 / total))
        .collect()
}

/// Mean of `X_n / n` over independent environments.
pub fn speed_estimate(law: &SiteLaw, n_steps: u64, envs: usize, seed: &SeedTree) -> Result<EstimateReport, RwreError> {
    let xs: Vec<f64> = run_replicas(seed, envs, |_, s| {
        let mut env = Env1D::new(law.clone(), &s.child(0));
        let mut rng = s.child(1).stream();
        walk_position(&mut env, n_steps, &mut rng) as f64 / n_steps as f64
    });
    Ok(estat::mean_report(&xs, "rwre-speed")?.with_seed(seed))
}

/// Slope of `ln median Delta_n` against `ln n`, with incomplete walks counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingExponent {
    pub report: EstimateReport,
    pub incomplete: usize,
    pub lattice_span: Option<f64>,
}

pub fn hitting_exponent(
    law: &SiteLaw,
    levels: &[usize],
    replicas: usize,
    seed: &SeedTree,
) -> Result<HittingExponent, RwreError> {
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels.first().is_none_or(|&l| l == 0) {
        return Err(RwreError::Argument("levels must be positive and increasing"));
    }
    let top = *levels.last().unwrap_or(&1);
    let runs: Vec<WalkRecord> = run_replicas(&seed.child(0), replicas, |_, s| {
        let mut env = Env1D::new(law.clone(), &s.child(0));
        let mut rng = s.child(1).stream();
        simulate_rwre(&mut env, top, STEP_CAP, &mut rng)
    });
    let incomplete = runs.iter().filter(|r| !r.complete).count();
    let rows: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            levels
                .iter()
                .map(|&l| r.hitting_times.get(l - 1).map_or(STEP_CAP as f64, |&t| t as f64))
                .collect()
        })
        .collect();
    let grid: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let report = estat::loglog_slope_replicas(&grid, &rows, Centre::Median, 1000, &seed.child(1))?;
    Ok(HittingExponent { report, incomplete, lattice_span: law.lattice_span() })
}

/// `P[|X_{th} - X_t| <= eta ln t]` beside `arcsine_cdf(alpha, 1/h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwreAging {
    pub report: EstimateReport,
    pub arcsine: Option<f64>,
    pub lattice_span: Option<f64>,
}

pub fn aging_rwre(law: &SiteLaw, h: f64, t: u64, eta: f64, replicas: usize, seed: &SeedTree) -> Result<RwreAging, RwreError> {
    if !(h >= 1.0) || !(eta > 0.0) || t < 2 {
        return Err(RwreError::Argument("need h >= 1, eta > 0, t >= 2"));
    }
    let later = (t as f64 * h).round() as u64;
    let radius = eta * (t as f64).ln();
    let close: Vec<bool> = run_replicas(seed, replicas, |_, s| {
        if later == t {
            return true;
        }
        let mut env = Env1D::new(law.clone(), &s.child(0));
        let mut rng = s.child(1).stream();
        let xs = walk_positions_at(&mut env, &[t, later], &mut rng);
        ((xs[1] - xs[0]).abs() as f64) <= radius
    });
    let hits = close.iter().filter(|&&c| c).count();
    let arcsine = match kks_alpha(law) {
        Ok(Some(a)) if a < 1.0 => Some(randkit::arcsine_cdf(a, 1.0 / h)?),
        _ => None,
    };
    Ok(RwreAging {
        report: estat::proportion_report(hits, replicas, "rwre-aging").with_seed(seed),
        arcsine,
        lattice_span: law.lattice_span(),
    })
}
