//! Incipient infinite cluster of a critical Galton-Watson tree, built from
//! its spine, and the biased and simple walks on it.
//!
//! The biased walk is simulated at the level of the spine. Every visit to a
//! spine vertex is collapsed into one holding time: the number of trips into
//! the buds is geometric, and the time those trips take is `2 * sum D_w`
//! where `D_w` counts the descents into bud vertex `w`. Given the descents
//! into `v`, the descents into its children are a negative binomial count
//! split uniformly, so a trip of length `e^50` costs as much as the part of
//! the bud it touches rather than its duration.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estat::{self, Centre, EstimateReport, StatError};
use crate::gwtree::{self, GwError, OffspringLaw, NODE_CAP};
use crate::randkit::{SeedTree, Stream};
use crate::replicas::run_replicas;

#[derive(Debug, Error)]
pub enum CriticalError {
    #[error("offspring mean is {0}, a critical law needs exactly 1")]
    NotCritical(f64),
    #[error("offspring law has zero variance")]
    Degenerate,
    #[error("bias must exceed 1, got {0}")]
    Bias(f64),
    #[error("tree outgrew the node cap of {0}")]
    NodeCap(usize),
    #[error("{0}")]
    Argument(&'static str),
    #[error(transparent)]
    Law(#[from] GwError),
    #[error(transparent)]
    Stat(#[from] StatError),
}

/// Offspring law with mean one and positive variance.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalLaw {
    law: OffspringLaw,
    size_biased: OffspringLaw,
    variance: f64,
}

impl CriticalLaw {
    pub fn new(law: OffspringLaw) -> Result<Self, CriticalError> {
        let m = law.mean();
        if (m - 1.0).abs() > 1e-12 {
            return Err(CriticalError::NotCritical(m));
        }
        let variance = law.variance();
        if variance <= 1e-12 {
            return Err(CriticalError::Degenerate);
        }
        let size_biased = law.size_biased()?;
        Ok(Self { law, size_biased, variance })
    }

    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self, CriticalError> {
        Self::new(OffspringLaw::new(pmf)?)
    }

    /// `p_0 = p_2 = 1/2`.
    pub fn binary() -> Self {
        Self::from_pmf(vec![0.5, 0.0, 0.5]).expect("binary critical law")
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    /// Spine offspring law `k p_k`.
    pub fn size_biased(&self) -> &OffspringLaw {
        &self.size_biased
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// `n P[H >= n]` tends to this.
    pub fn height_constant(&self) -> f64 {
        2.0 / self.variance
    }
}

pub type NodeId = u32;
pub const ROOT: NodeId = 0;
const UNEXPANDED: u32 = u32::MAX;

/// Lazily grown IIC. Spine vertex `i` sits at depth `i`; every other vertex
/// carries the level of its spine ancestor.
#[derive(Debug, Clone)]
pub struct SpineIIC {
    law: CriticalLaw,
    parent: Vec<NodeId>,
    first_child: Vec<NodeId>,
    child_count: Vec<u32>,
    depth: Vec<u32>,
    level: Vec<u32>,
    on_spine: Vec<bool>,
    spine: Vec<NodeId>,
    cap: usize,
    rng: Stream,
}

/// IIC whose randomness comes from `stream`.
pub fn gen_spine(law: &CriticalLaw, stream: Stream) -> SpineIIC {
    SpineIIC::rooted(law, stream, true)
}

impl SpineIIC {
    fn rooted(law: &CriticalLaw, rng: Stream, spine_root: bool) -> Self {
        Self {
            law: law.clone(),
            parent: vec![ROOT],
            first_child: vec![0],
            child_count: vec![UNEXPANDED],
            depth: vec![0],
            level: vec![0],
            on_spine: vec![spine_root],
            spine: if spine_root { vec![ROOT] } else { Vec::new() },
            cap: NODE_CAP,
            rng,
        }
    }

    /// A lone critical tree with no spine, used for trap excursions.
    fn bud(law: &CriticalLaw, rng: Stream) -> Self {
        Self::rooted(law, rng, false)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn law(&self) -> &CriticalLaw {
        &self.law
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        (u != ROOT).then(|| self.parent[u as usize])
    }

    pub fn depth(&self, u: NodeId) -> u32 {
        self.depth[u as usize]
    }

    pub fn is_spine(&self, u: NodeId) -> bool {
        self.on_spine[u as usize]
    }

    /// Spine level of `pi(u)`.
    pub fn level(&self, u: NodeId) -> u32 {
        self.level[u as usize]
    }

    /// Spine vertex `pi(u)`.
    pub fn project(&self, u: NodeId) -> NodeId {
        self.spine[self.level(u) as usize]
    }

    /// `rho_i`, growing the spine as needed.
    pub fn spine_vertex(&mut self, i: u32) -> Result<NodeId, CriticalError> {
        while self.spine.len() <= i as usize {
            let last = *self.spine.last().expect("bud trees have no spine");
            self.children(last)?;
        }
        Ok(self.spine[i as usize])
    }

    /// Children of `u` as `(first, count)`, expanding `u` on first use.
    pub fn children(&mut self, u: NodeId) -> Result<(NodeId, u32), CriticalError> {
        let ui = u as usize;
        if self.child_count[ui] == UNEXPANDED {
            let spine = self.on_spine[ui];
            let k = if spine {
                self.law.size_biased.sample(&mut self.rng)
            } else {
                self.law.law.sample(&mut self.rng)
            };
            if self.len() + k > self.cap {
                return Err(CriticalError::NodeCap(self.cap));
            }
            let next = if spine { Some(self.rng.random_range(0..k)) } else { None };
            let first = self.len() as NodeId;
            for c in 0..k {
                let continues = next == Some(c);
                self.parent.push(u);
                self.first_child.push(0);
                self.child_count.push(UNEXPANDED);
                self.depth.push(self.depth[ui] + 1);
                self.level.push(if continues { self.level[ui] + 1 } else { self.level[ui] });
                self.on_spine.push(continues);
                if continues {
                    self.spine.push(first + c as NodeId);
                }
            }
            self.first_child[ui] = first;
            self.child_count[ui] = k as u32;
        }
        Ok((self.first_child[ui], self.child_count[ui]))
    }

    /// One step of the `beta`-biased walk; from the root every child is
    /// equally likely.
    pub fn step<R: Rng + ?Sized>(&mut self, u: NodeId, beta: f64, rng: &mut R) -> Result<NodeId, CriticalError> {
        let (first, k) = self.children(u)?;
        if u == ROOT {
            return Ok(if k == 0 { u } else { first + rng.random_range(0..k) });
        }
        let x = rng.random::<f64>() * (1.0 + beta * k as f64);
        if x < 1.0 {
            Ok(self.parent[u as usize])
        } else {
            Ok(first + (((x - 1.0) / beta) as u32).min(k - 1))
        }
    }

    /// Time spent below `c` by `descents` trips entering `c` from its parent,
    /// counting both edge crossings of each step. Returns `None` once the
    /// running total passes `limit`.
    fn trip_time<R: Rng + ?Sized>(
        &mut self,
        c: NodeId,
        descents: f64,
        beta: f64,
        limit: f64,
        rng: &mut R,
    ) -> Result<Option<f64>, CriticalError> {
        let mut total = 0.0;
        let mut stack = vec![(c, descents)];
        let mut split = Vec::new();
        while let Some((v, d)) = stack.pop() {
            total += 2.0 * d;
            if total > limit {
                return Ok(None);
            }
            let (first, j) = self.children(v)?;
            if j == 0 {
                continue;
            }
            let out = neg_binomial(d, 1.0 / (1.0 + beta * j as f64), rng);
            uniform_split(out, j, rng, &mut split);
            for (i, &n) in split.iter().enumerate() {
                if n > 0.0 {
                    stack.push((first + i as NodeId, n));
                }
            }
        }
        Ok(Some(total))
    }

    /// One visit to `rho_i`: the time until the walk steps along the spine
    /// (that step included) and whether it moved outwards. `None` for the
    /// time means it exceeds `limit`.
    fn holding<R: Rng + ?Sized>(
        &mut self,
        i: u32,
        beta: f64,
        limit: f64,
        rng: &mut R,
    ) -> Result<(Option<f64>, bool), CriticalError> {
        let v = self.spine_vertex(i)?;
        let (first, k) = self.children(v)?;
        let next = self.spine_vertex(i + 1)?;
        let (stay, forward) = if i == 0 {
            (1.0 - 1.0 / k as f64, true)
        } else {
            let kb = beta * k as f64;
            ((kb - beta) / (1.0 + kb), rng.random::<f64>() < beta / (1.0 + beta))
        };
        let trips = if stay > 0.0 {
            Geometric::new(1.0 - stay).expect("success probability in (0, 1]").sample(rng)
        } else {
            0
        };
        let mut time = 1.0;
        if trips > 0 {
            let buds: Vec<NodeId> = (first..first + k).filter(|&c| c != next).collect();
            let mut per_bud = vec![0u64; buds.len()];
            for _ in 0..trips {
                per_bud[rng.random_range(0..buds.len())] += 1;
            }
            for (&c, &n) in buds.iter().zip(&per_bud) {
                if n == 0 {
                    continue;
                }
                match self.trip_time(c, n as f64, beta, limit - time, rng)? {
                    Some(t) => time += t,
                    None => return Ok((None, forward)),
                }
            }
        }
        Ok(((time <= limit).then_some(time), forward))
    }
}

/// Failures before `r` successes with success probability `p`. Poisson-gamma
/// mixture in general; a Gaussian once the mean is past 1e12, where the
/// relative error is below 1e-6.
fn neg_binomial<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> f64 {
    if p >= 1.0 || r <= 0.0 {
        return 0.0;
    }
    let mean = r * (1.0 - p) / p;
    if r <= 8.0 {
        let geo = Geometric::new(p).expect("p in (0, 1)");
        return (0..r as u64).map(|_| geo.sample(rng) as f64).sum();
    }
    if mean > 1e12 {
        let sd = (r * (1.0 - p)).sqrt() / p;
        return Normal::new(mean, sd).expect("finite").sample(rng).round().max(0.0);
    }
    let lambda = Gamma::new(r, (1.0 - p) / p).expect("positive shape").sample(rng);
    if lambda <= 0.0 {
        return 0.0;
    }
    Poisson::new(lambda).expect("finite rate").sample(rng)
}

/// Uniform multinomial split of `n` into `j` cells.
fn uniform_split<R: Rng + ?Sized>(n: f64, j: u32, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    let mut left = n;
    for cell in 0..j {
        let remaining = j - cell;
        if remaining == 1 || left == 0.0 {
            out.push(if remaining == 1 { left } else { 0.0 });
            continue;
        }
        let q = 1.0 / remaining as f64;
        let take = if left <= 9e15 {
            Binomial::new(left as u64, q).expect("valid binomial").sample(rng) as f64
        } else {
            let sd = (left * q * (1.0 - q)).sqrt();
            Normal::new(left * q, sd).expect("finite").sample(rng).round().clamp(0.0, left)
        };
        out.push(take);
        left -= take;
    }
}

/// Empirical `P[H >= n]` of a critical tree next to `2 / (Var Z n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightTailPoint {
    pub n: u32,
    pub prob: EstimateReport,
    /// `n P[H >= n]`.
    pub scaled: f64,
    /// `P[H >= n]` over the asymptote; absent at `n = 0`.
    pub ratio: Option<f64>,
}

pub fn critical_height_tail(
    law: &CriticalLaw,
    n_grid: &[u32],
    trees: usize,
    seed: &SeedTree,
) -> Result<Vec<HeightTailPoint>, CriticalError> {
    let Some(&max_n) = n_grid.iter().max() else {
        return Ok(Vec::new());
    };
    let counts = gwtree::trap_height_direct(law.law(), trees, max_n, seed)?;
    Ok(n_grid
        .iter()
        .map(|&n| {
            let hits = counts[n as usize] as usize;
            let prob = estat::proportion_report(hits, trees, "height-tail").with_seed(seed);
            let p = prob.estimate;
            HeightTailPoint {
                n,
                scaled: n as f64 * p,
                ratio: (n > 0).then(|| p * n as f64 / law.height_constant()),
                prob,
            }
        })
        .collect())
}

/// Positions of the naive walk from the root at each of the sorted `times`.
pub fn walk_positions<R: Rng + ?Sized>(
    iic: &mut SpineIIC,
    beta: f64,
    times: &[u64],
    rng: &mut R,
) -> Result<Vec<NodeId>, CriticalError> {
    let mut out = Vec::with_capacity(times.len());
    let mut x = ROOT;
    let mut t = 0u64;
    for &target in times {
        while t < target {
            x = iic.step(x, beta, rng)?;
            t += 1;
        }
        out.push(x);
    }
    Ok(out)
}

/// Spine-level run of the biased walk: `pi(X_t)` at each checkpoint and the
/// first hitting time of each requested spine level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpineRun {
    pub levels_at: Vec<u32>,
    pub hits: Vec<Option<f64>>,
    /// Some hitting time lies beyond the time cap.
    pub partial: bool,
}

/// Runs the collapsed walk until every checkpoint in `times` (sorted) has a
/// spine level and every level in `targets` has been reached or the clock
/// passes `time_cap`.
pub fn spine_run<R: Rng + ?Sized>(
    iic: &mut SpineIIC,
    beta: f64,
    times: &[f64],
    targets: &[u32],
    time_cap: f64,
    rng: &mut R,
) -> Result<SpineRun, CriticalError> {
    let horizon = if targets.is_empty() {
        times.last().copied().unwrap_or(0.0)
    } else {
        time_cap.max(times.last().copied().unwrap_or(0.0))
    };
    let top = targets.iter().copied().max();
    let mut levels_at = Vec::with_capacity(times.len());
    let mut first_hit: Vec<Option<f64>> = vec![None; top.map_or(0, |m| m as usize + 1)];
    if let Some(h) = first_hit.first_mut() {
        *h = Some(0.0);
    }
    let mut reached = 0u32;
    let (mut level, mut clock) = (0u32, 0.0f64);
    let mut partial = false;
    loop {
        let pending_times = levels_at.len() < times.len();
        let pending_levels = top.is_some_and(|m| reached < m);
        if !pending_times && !pending_levels {
            break;
        }
        let (held, forward) = iic.holding(level, beta, horizon - clock, rng)?;
        let end = held.map_or(f64::INFINITY, |w| clock + w);
        while levels_at.len() < times.len() && times[levels_at.len()] < end {
            levels_at.push(level);
        }
        if held.is_none() {
            partial = pending_levels;
            break;
        }
        clock = end;
        level = if forward { level + 1 } else { level - 1 };
        if level > reached {
            reached = level;
            if let Some(slot) = first_hit.get_mut(level as usize) {
                *slot = Some(clock);
            }
        }
    }
    let hits = targets.iter().map(|&m| first_hit[m as usize]).collect();
    Ok(SpineRun { levels_at, hits, partial })
}

/// Settings for the extremal scaling and aging run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IicWalkConfig {
    pub beta: f64,
    pub n: u32,
    /// Exponents `a` of the checkpoints `e^{a n}`, increasing.
    pub exponents: Vec<f64>,
    /// Profile grid `t`: hitting times of spine level `floor(n t)`.
    pub profile: Vec<f64>,
    pub replicas: usize,
    pub time_cap: f64,
}

impl IicWalkConfig {
    pub fn aging(beta: f64, n: u32, a: f64, b: f64, replicas: usize) -> Self {
        Self { beta, n, exponents: vec![a, b], profile: Vec::new(), replicas, time_cap: f64::MAX }
    }
}

/// `P[pi(X_{e^{an}}) = pi(X_{e^{bn}})]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingPoint {
    pub a: f64,
    pub b: f64,
    pub prob: EstimateReport,
}

/// Median of `ln_+ Delta_{floor(nt)} / (n ln beta)` over replicas that got
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub level: u32,
    pub median: f64,
    pub reached: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IicWalkSummary {
    pub aging: Vec<AgingPoint>,
    pub profile: Vec<ProfilePoint>,
    /// Per replica, the scaled profile up to the first missing value.
    pub profiles: Vec<Vec<f64>>,
    pub monotone: usize,
    pub partial: usize,
    pub capped: usize,
}

pub fn biased_walk_iic(law: &CriticalLaw, cfg: &IicWalkConfig, seed: &SeedTree) -> Result<IicWalkSummary, CriticalError> {
    if !(cfg.beta > 1.0) {
        return Err(CriticalError::Bias(cfg.beta));
    }
    if cfg.n == 0 || cfg.replicas == 0 {
        return Err(CriticalError::Argument("need n >= 1 and at least one replica"));
    }
    if cfg.exponents.windows(2).any(|w| w[1] < w[0]) || cfg.exponents.iter().any(|a| !(*a > 0.0)) {
        return Err(CriticalError::Argument("exponents must be positive and increasing"));
    }
    let n = cfg.n as f64;
    let times: Vec<f64> = cfg.exponents.iter().map(|a| (a * n).exp()).collect();
    let targets: Vec<u32> = cfg.profile.iter().map(|t| (n * t).floor() as u32).collect();
    let scale = n * cfg.beta.ln();
    let runs = run_replicas(seed, cfg.replicas, |_, s| {
        let mut iic = gen_spine(law, s.child(0).stream());
        spine_run(&mut iic, cfg.beta, &times, &targets, cfg.time_cap, &mut s.child(1).stream())
    });
    let mut kept = Vec::with_capacity(runs.len());
    let mut capped = 0;
    for run in runs {
        match run {
            Ok(r) => kept.push(r),
            Err(CriticalError::NodeCap(_)) => capped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut aging = Vec::new();
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let same = kept.iter().filter(|r| r.levels_at[i] == r.levels_at[j]).count();
            aging.push(AgingPoint {
                a: cfg.exponents[i],
                b: cfg.exponents[j],
                prob: estat::proportion_report(same, kept.len(), "extremal-aging").with_seed(seed),
            });
        }
    }
    let scaled = |h: f64| h.max(1.0).ln() / scale;
    let profiles: Vec<Vec<f64>> = kept.iter().map(|r| r.hits.iter().map_while(|h| h.map(scaled)).collect()).collect();
    let monotone = profiles.iter().filter(|p| p.windows(2).all(|w| w[1] >= w[0])).count();
    let profile = cfg
        .profile
        .iter()
        .zip(&targets)
        .enumerate()
        .map(|(g, (&t, &level))| {
            let vals: Vec<f64> = kept.iter().filter_map(|r| r.hits[g].map(scaled)).collect();
            ProfilePoint { t, level, median: if vals.is_empty() { f64::NAN } else { estat::median(&vals) }, reached: vals.len() }
        })
        .collect();
    Ok(IicWalkSummary {
        aging,
        profile,
        profiles,
        monotone,
        partial: kept.iter().filter(|r| r.partial).count(),
        capped,
    })
}

/// Durations of single trips from a spine vertex into a fresh bud and back.
/// Trips longer than `limit` are reported as `f64::INFINITY`.
pub fn trap_excursion_times(
    law: &CriticalLaw,
    beta: f64,
    count: usize,
    limit: f64,
    seed: &SeedTree,
) -> Result<Vec<f64>, CriticalError> {
    const CHUNKS: usize = 64;
    let per = count.div_ceil(CHUNKS);
    let parts = run_replicas(seed, CHUNKS, |c, s| -> Result<Vec<f64>, CriticalError> {
        let todo = per.min(count.saturating_sub(c * per));
        let mut rng = s.stream();
        let mut out = Vec::with_capacity(todo);
        for i in 0..todo {
            let mut bud = SpineIIC::bud(law, s.child(i as u64).stream());
            out.push(bud.trip_time(ROOT, 1.0, beta, limit, &mut rng)?.unwrap_or(f64::INFINITY));
        }
        Ok(out)
    });
    let mut all = Vec::with_capacity(count);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Collapsed walk against step-by-step simulation: histograms of the spine
/// level at time `t` and their total-variation distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub t: u64,
    pub naive: Vec<u64>,
    pub collapsed: Vec<u64>,
    pub tv: f64,
}

pub fn collapsed_vs_naive(
    law: &CriticalLaw,
    beta: f64,
    t: u64,
    replicas: usize,
    seed: &SeedTree,
) -> Result<CrossCheck, CriticalError> {
    if !(beta > 1.0) {
        return Err(CriticalError::Bias(beta));
    }
    let levels = run_replicas(seed, replicas, |_, s| -> Result<(u32, u32), CriticalError> {
        let mut iic = gen_spine(law, s.child(0).stream());
        let x = walk_positions(&mut iic, beta, &[t], &mut s.child(1).stream())?[0];
        let mut fresh = gen_spine(law, s.child(2).stream());
        // position at t means the walk has made t steps, so t lies in [A, A+W)
        let run = spine_run(&mut fresh, beta, &[t as f64], &[], 0.0, &mut s.child(3).stream())?;
        Ok((iic.level(x), run.levels_at[0]))
    });
    let mut naive = Vec::new();
    let mut collapsed = Vec::new();
    for r in levels {
        let (a, b) = r?;
        for (hist, v) in [(&mut naive, a), (&mut collapsed, b)] {
            if hist.len() <= v as usize {
                hist.resize(v as usize + 1, 0);
            }
            hist[v as usize] += 1;
        }
    }
    let bins = naive.len().max(collapsed.len());
    naive.resize(bins, 0);
    collapsed.resize(bins, 0);
    let tv = 0.5
        * naive
            .iter()
            .zip(&collapsed)
            .map(|(&a, &b)| (a as f64 - b as f64).abs() / replicas as f64)
            .sum::<f64>();
    Ok(CrossCheck { t, naive, collapsed, tv })
}

/// Slope of `ln median |X_n|` against `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementExponent {
    pub report: EstimateReport,
    pub grid: Vec<u64>,
    pub medians: Vec<f64>,
    pub capped: usize,
}

/// Distance from the root of the `beta`-biased walk on the IIC, regressed on
/// the time grid. `beta = 1` is the simple walk.
pub fn displacement_exponent(
    law: &CriticalLaw,
    beta: f64,
    grid: &[u64],
    replicas: usize,
    seed: &SeedTree,
) -> Result<DisplacementExponent, CriticalError> {
    if !(beta > 0.0) {
        return Err(CriticalError::Bias(beta));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CriticalError::Argument("time grid must increase"));
    }
    let rows = run_replicas(seed, replicas, |_, s| -> Result<Vec<f64>, CriticalError> {
        let mut iic = gen_spine(law, s.child(0).stream());
        let xs = walk_positions(&mut iic, beta, grid, &mut s.child(1).stream())?;
        Ok(xs.iter().map(|&x| iic.depth(x) as f64).collect())
    });
    let mut kept = Vec::with_capacity(rows.len());
    let mut capped = 0;
    for r in rows {
        match r {
            Ok(v) => kept.push(v),
            Err(CriticalError::NodeCap(_)) => capped += 1,
            Err(e) => return Err(e),
        }
    }
    let gridf: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let report = estat::loglog_slope_replicas(&gridf, &kept, Centre::Median, 1000, &seed.child(u64::MAX))?;
    let medians = (0..grid.len())
        .map(|g| estat::median(&kept.iter().map(|r| r[g]).collect::<Vec<_>>()))
        .collect();
    Ok(DisplacementExponent { report, grid: grid.to_vec(), medians, capped })
}

/// Simple walk on the IIC; the exponent should be near 1/3.
pub fn simple_walk_iic(
    law: &CriticalLaw,
    grid: &[u64],
    replicas: usize,
    seed: &SeedTree,
) -> Result<DisplacementExponent, CriticalError> {
    displacement_exponent(law, 1.0, grid, replicas, seed)
}

#[cfg(test)]
mod tests;
