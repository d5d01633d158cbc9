//! Directed and biased Bouchaud trap models.
//!
//! The embedded walk `Y` is a biased walk on Z (or the deterministic walk
//! `Y_i = i` when the bias is infinite) and the clock is
//! `S(n) = sum_{i<n} tau_{Y_i} e_i`. The continuous-time position is
//! `X_t = Y_k` for `S(k) <= t < S(k+1)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estat::{self, Centre, EstimateReport};
use crate::randkit::{self, sample_pareto, SeedTree, Stream, TailSpec};
use crate::replicas::run_replicas;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapError {
    #[error("bias must exceed 1, got {0}")]
    Bias(f64),
    #[error("aging needs 0 < a <= b, got a = {a}, b = {b}")]
    AgingTimes { a: f64, b: f64 },
    #[error("time grid must be positive and increasing")]
    Grid,
    #[error(transparent)]
    Stat(#[from] estat::StatError),
    #[error(transparent)]
    Rand(#[from] randkit::RandError),
}

/// Law of the trap depths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrapLaw {
    Pareto(TailSpec),
    /// Every site has the same mean holding time.
    Constant(f64),
}

impl TrapLaw {
    pub fn pareto(alpha: f64) -> Result<Self, TrapError> {
        Ok(Self::Pareto(TailSpec::new(alpha, 1.0)?))
    }

    fn draw(&self, rng: &mut Stream) -> f64 {
        match self {
            Self::Pareto(spec) => sample_pareto(spec, rng),
            Self::Constant(c) => *c,
        }
    }

    pub fn tail_index(&self) -> Option<f64> {
        match self {
            Self::Pareto(spec) => Some(spec.alpha()),
            Self::Constant(_) => None,
        }
    }
}

/// Bias of the embedded walk: right with probability `beta / (beta + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bias {
    Finite(f64),
    Directed,
}

impl Bias {
    pub fn new(beta: f64) -> Result<Self, TrapError> {
        if beta == f64::INFINITY {
            Ok(Self::Directed)
        } else if beta > 1.0 {
            Ok(Self::Finite(beta))
        } else {
            Err(TrapError::Bias(beta))
        }
    }

    fn p_right(&self) -> f64 {
        match self {
            Self::Finite(b) => b / (b + 1.0),
            Self::Directed => 1.0,
        }
    }
}

/// Trap depths over Z, drawn on first visit and remembered afterwards.
/// Sites `>= 0` and `< 0` use separate streams so the order in which the
/// walk discovers them does not change the environment.
#[derive(Debug, Clone)]
pub struct TrapLandscape {
    law: TrapLaw,
    right: Vec<f64>,
    left: Vec<f64>,
    right_rng: Stream,
    left_rng: Stream,
}

impl TrapLandscape {
    pub fn new(law: TrapLaw, seed: &SeedTree) -> Self {
        Self {
            law,
            right: Vec::new(),
            left: Vec::new(),
            right_rng: seed.child(0).stream(),
            left_rng: seed.child(1).stream(),
        }
    }

    pub fn law(&self) -> &TrapLaw {
        &self.law
    }

    pub fn tau(&mut self, x: i64) -> f64 {
        let (store, rng, idx) = if x >= 0 {
            (&mut self.right, &mut self.right_rng, x as usize)
        } else {
            (&mut self.left, &mut self.left_rng, (-x - 1) as usize)
        };
        while store.len() <= idx {
            store.push(self.law.draw(rng));
        }
        store[idx]
    }

    /// Number of sites generated so far.
    pub fn generated(&self) -> usize {
        self.right.len() + self.left.len()
    }
}

/// Embedded positions `Y_0..Y_n` and clock values `S(0)..S(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockedTrajectory {
    pub positions: Vec<i64>,
    pub clock: Vec<f64>,
}

impl ClockedTrajectory {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// `X_t`, or `None` when `t` lies past the last recorded jump.
    pub fn position_at(&self, t: f64) -> Option<i64> {
        if t < 0.0 || t >= *self.clock.last()? {
            return None;
        }
        let k = self.clock.partition_point(|&s| s <= t) - 1;
        Some(self.positions[k])
    }
}

fn holding(rng: &mut Stream) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e.max(f64::MIN_POSITIVE)
}

// A holding time below half an ulp of the clock would vanish in the sum; the
// clock then moves to the next float so that it stays strictly increasing.
fn advance(clock: f64, wait: f64) -> f64 {
    let next = clock + wait;
    if next > clock { next } else { clock.next_up() }
}

struct Stepper {
    bias: Bias,
    y: i64,
    s: f64,
}

impl Stepper {
    fn step(&mut self, land: &mut TrapLandscape, rng: &mut Stream) {
        self.s = advance(self.s, land.tau(self.y) * holding(rng));
        self.y += match self.bias {
            Bias::Directed => 1,
            Bias::Finite(_) if rng.random_bool(self.bias.p_right()) => 1,
            Bias::Finite(_) => -1,
        };
    }
}

/// `n_steps` jumps of the trap model started at 0.
pub fn simulate_btm(landscape: &mut TrapLandscape, bias: Bias, n_steps: usize, rng: &mut Stream) -> ClockedTrajectory {
    let mut st = Stepper { bias, y: 0, s: 0.0 };
    let mut positions = Vec::with_capacity(n_steps + 1);
    let mut clock = Vec::with_capacity(n_steps + 1);
    positions.push(0);
    clock.push(0.0);
    for _ in 0..n_steps {
        st.step(landscape, rng);
        positions.push(st.y);
        clock.push(st.s);
    }
    ClockedTrajectory { positions, clock }
}

/// Positions `X_t` at each time of the increasing grid, stepping only as far
/// as the last time requires. Draws come in the same order as `simulate_btm`.
pub fn positions_at(landscape: &mut TrapLandscape, bias: Bias, times: &[f64], rng: &mut Stream) -> Vec<i64> {
    let mut y = 0i64;
    let mut leave = landscape.tau(0) * holding(rng);
    times
        .iter()
        .map(|&t| {
            while leave <= t {
                y += match bias {
                    Bias::Directed => 1,
                    Bias::Finite(_) if rng.random_bool(bias.p_right()) => 1,
                    Bias::Finite(_) => -1,
                };
                leave = advance(leave, landscape.tau(y) * holding(rng));
            }
            y
        })
        .collect()
}

/// Parameters shared by the replica-level estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtmSetup {
    pub law: TrapLaw,
    pub bias: Bias,
}

fn check_grid(times: &[f64]) -> Result<(), TrapError> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TrapError::Grid);
    }
    Ok(())
}

fn replica_positions(setup: &BtmSetup, times: &[f64], seed: &SeedTree) -> Vec<i64> {
    let mut land = TrapLandscape::new(setup.law, &seed.child(0));
    let mut rng = seed.child(1).stream();
    positions_at(&mut land, setup.bias, times, &mut rng)
}

/// Displacement exponent with the low-replica flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub report: EstimateReport,
    pub insufficient_replicas: bool,
    pub exploratory: bool,
}

/// Slope of `ln median X_t` against `ln t` over replicas, bootstrap CI.
pub fn scaling_exponent_btm(
    setup: &BtmSetup,
    t_grid: &[f64],
    replicas: usize,
    seed: &SeedTree,
) -> Result<ScalingEstimate, TrapError> {
    check_grid(t_grid)?;
    let rows: Vec<Vec<f64>> = run_replicas(&seed.child(0), replicas, |_, s| {
        replica_positions(setup, t_grid, s).into_iter().map(|x| x as f64).collect()
    });
    let report = estat::loglog_slope_replicas(t_grid, &rows, Centre::Median, 1000, &seed.child(1))?;
    Ok(ScalingEstimate {
        report,
        insufficient_replicas: replicas < 100,
        exploratory: setup.law.tail_index().is_some_and(|a| a > 1.0),
    })
}

/// Empirical `P[X_{at} = X_{bt}]` beside its arcsine limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingEstimate {
    pub report: EstimateReport,
    pub arcsine: Option<f64>,
}

pub fn aging_probability(
    setup: &BtmSetup,
    a: f64,
    b: f64,
    t: f64,
    replicas: usize,
    seed: &SeedTree,
) -> Result<AgingEstimate, TrapError> {
    if !(a > 0.0 && a <= b) {
        return Err(TrapError::AgingTimes { a, b });
    }
    let same: Vec<bool> = run_replicas(seed, replicas, |_, s| {
        if a == b {
            return true;
        }
        let xs = replica_positions(setup, &[a * t, b * t], s);
        xs[0] == xs[1]
    });
    let hits = same.iter().filter(|&&x| x).count();
    let arcsine = match setup.law.tail_index() {
        Some(alpha) if alpha < 1.0 => Some(randkit::arcsine_cdf(alpha, a / b)?),
        _ => None,
    };
    let report = estat::proportion_report(hits, replicas, "aging-fraction").with_seed(seed);
    Ok(AgingEstimate { report, arcsine })
}

/// Clock values `S(n) / n^(1/alpha)` of the directed model over replicas.
pub fn rescaled_clocks(law: &TrapLaw, alpha: f64, n: usize, replicas: usize, seed: &SeedTree) -> Vec<f64> {
    let norm = (n as f64).powf(1.0 / alpha);
    run_replicas(seed, replicas, |_, s| {
        let mut rng = s.stream();
        let mut total = 0.0;
        for _ in 0..n {
            let tau = match law {
                TrapLaw::Pareto(spec) => sample_pareto(spec, &mut rng),
                TrapLaw::Constant(c) => *c,
            };
            total += tau * holding(&mut rng);
        }
        total / norm
    })
}

/// KS distance between rescaled directed-model clocks and CMS draws of the
/// completely asymmetric `alpha`-stable law, both divided by their medians.
pub fn clock_vs_stable(law: &TrapLaw, alpha: f64, n: usize, replicas: usize, seed: &SeedTree) -> Result<f64, TrapError> {
    let clocks = rescaled_clocks(law, alpha, n, replicas, &seed.child(0));
    let mut rng = seed.child(1).stream();
    let reference: Result<Vec<f64>, _> = (0..replicas).map(|_| randkit::sample_stable_ca(alpha, &mut rng)).collect();
    Ok(estat::ks_two_sample(&estat::median_normalized(&clocks), &estat::median_normalized(&reference?)))
}

/// Largest retreat `max_k (max_{j<=k} Y_j - Y_k)` of the embedded walk.
pub fn embedded_backtrack(bias: Bias, n_steps: usize, rng: &mut Stream) -> i64 {
    let p = bias.p_right();
    let (mut y, mut top, mut worst) = (0i64, 0i64, 0i64);
    for _ in 0..n_steps {
        y += if p >= 1.0 || rng.random_bool(p) { 1 } else { -1 };
        top = top.max(y);
        worst = worst.max(top - y);
    }
    worst
}
