//! Bond percolation on finite boxes of Z^d, the conductance-biased walk on
//! the largest cluster, and the backtrack function.
//!
//! Vertices are indexed row-major (last coordinate fastest). The state of the
//! edge from `v` to `v + e_axis` is bit `v * d + axis` of the bitmap; slots for
//! edges leaving the box are always closed.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estat::{self, Centre, EstimateReport, StatError};
use crate::randkit::{SeedTree, Stream};
use crate::replicas::run_replicas;

const MAGIC: &[u8; 4] = b"PBX1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PercError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("sides must number d and each be at least 2")]
    Sides,
    #[error("retention probability {0} outside (0, 1)")]
    Retention(f64),
    #[error("direction must be a unit vector of length d")]
    Direction,
    #[error("bias strength {0} must be finite and >= 0")]
    Strength(f64),
    #[error("start vertex is not in the largest cluster")]
    NotInLargest,
    #[error("p = {p} is not above p_c = {p_c}")]
    Subcritical { p: f64, p_c: f64 },
    #[error("p_c is only built in for d = 2")]
    UnknownThreshold,
    #[error("malformed box encoding: {0}")]
    Format(&'static str),
    #[error("bad argument: {0}")]
    Argument(&'static str),
    #[error(transparent)]
    Stat(#[from] StatError),
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let up = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = up;
            v = up;
        }
        v
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn size_of(&mut self, v: u32) -> u32 {
        let r = self.find(v);
        self.size[r as usize]
    }
}

/// Bias `l = lambda * direction` with a unit direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    lambda: f64,
    direction: Vec<f64>,
}

impl BiasVector {
    /// `lambda = 0` is allowed and gives the simple random walk.
    pub fn new(lambda: f64, direction: Vec<f64>) -> Result<Self, PercError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(PercError::Strength(lambda));
        }
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if direction.len() < 2 || (norm - 1.0).abs() > 1e-12 {
            return Err(PercError::Direction);
        }
        Ok(Self { lambda, direction })
    }

    /// Unit vector along `axis` in dimension `d`.
    pub fn axial(lambda: f64, d: usize, axis: usize) -> Result<Self, PercError> {
        let mut dir = vec![0.0; d];
        *dir.get_mut(axis).ok_or(PercError::Direction)? = 1.0;
        Self::new(lambda, dir)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }
}

/// Finite box with i.i.d. open edges and its cluster labels.
#[derive(Debug, Clone)]
pub struct PercBox {
    d: usize,
    sides: Vec<usize>,
    strides: Vec<usize>,
    p: f64,
    seed: SeedTree,
    bits: Vec<u64>,
    labels: Vec<u32>,
    cluster_size: Vec<u32>,
    largest: u32,
}

fn check_shape(d: usize, sides: &[usize]) -> Result<usize, PercError> {
    if d < 2 {
        return Err(PercError::Dimension(d));
    }
    if sides.len() != d || sides.iter().any(|&s| s < 2) {
        return Err(PercError::Sides);
    }
    sides
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&n| n < u32::MAX as usize)
        .ok_or(PercError::Argument("box too large"))
}

pub fn gen_percbox(d: usize, sides: &[usize], p: f64, seed: &SeedTree) -> Result<PercBox, PercError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PercError::Retention(p));
    }
    let mut rng = seed.stream();
    PercBox::from_edges(d, sides, p, seed.clone(), |_, _| rng.random::<f64>() < p)
}

impl PercBox {
    /// Build from an explicit edge rule, called once per in-box edge in
    /// bitmap order.
    pub fn from_edges(
        d: usize,
        sides: &[usize],
        p: f64,
        seed: SeedTree,
        mut open: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, PercError> {
        let n = check_shape(d, sides)?;
        let mut strides = vec![1usize; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * sides[a + 1];
        }
        let mut bits = vec![0u64; (n * d).div_ceil(64)];
        let mut coords = vec![0usize; d];
        for v in 0..n {
            for a in 0..d {
                if coords[a] + 1 < sides[a] && open(v, a) {
                    let b = v * d + a;
                    bits[b / 64] |= 1 << (b % 64);
                }
            }
            advance(&mut coords, sides);
        }
        Ok(Self::labelled(d, sides.to_vec(), strides, p, seed, bits))
    }

    fn labelled(d: usize, sides: Vec<usize>, strides: Vec<usize>, p: f64, seed: SeedTree, bits: Vec<u64>) -> Self {
        let n: usize = sides.iter().product();
        let mut uf = UnionFind::new(n);
        for (w, &word) in bits.iter().enumerate() {
            let mut rest = word;
            while rest != 0 {
                let b = w * 64 + rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let (v, a) = (b / d, b % d);
                uf.union(v as u32, (v + strides[a]) as u32);
            }
        }
        let labels: Vec<u32> = (0..n as u32).map(|v| uf.find(v)).collect();
        let mut cluster_size = vec![0u32; n];
        for &l in &labels {
            cluster_size[l as usize] += 1;
        }
        // first vertex (in index order) of a maximal cluster decides ties
        let mut largest = labels[0];
        for &l in &labels {
            if cluster_size[l as usize] > cluster_size[largest as usize] {
                largest = l;
            }
        }
        Self { d, sides, strides, p, seed, bits, labels, cluster_size, largest }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> &SeedTree {
        &self.seed
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    /// Nearest-neighbour edges inside the box.
    pub fn n_edges(&self) -> usize {
        let n = self.n_vertices();
        self.sides.iter().map(|&s| n / s * (s - 1)).sum()
    }

    pub fn open_edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn coords(&self, v: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.sides).map(|(s, l)| v / s % l).collect()
    }

    fn coord(&self, v: usize, axis: usize) -> usize {
        v / self.strides[axis] % self.sides[axis]
    }

    /// State of the edge `v -- v + e_axis`.
    pub fn is_open(&self, v: usize, axis: usize) -> bool {
        let b = v * self.d + axis;
        self.bits[b / 64] >> (b % 64) & 1 == 1
    }

    /// Open neighbours as `(vertex, axis, +1 | -1)`.
    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        (0..self.d).flat_map(move |a| {
            let up = self.is_open(v, a).then(|| (v + self.strides[a], a, 1i8));
            let down =
                (self.coord(v, a) > 0 && self.is_open(v - self.strides[a], a)).then(|| (v - self.strides[a], a, -1i8));
            up.into_iter().chain(down)
        })
    }

    pub fn is_edge_open_between(&self, u: usize, v: usize) -> bool {
        let (lo, hi) = (u.min(v), u.max(v));
        (0..self.d).any(|a| hi - lo == self.strides[a] && self.coord(lo, a) + 1 < self.sides[a] && self.is_open(lo, a))
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        (0..self.d).any(|a| {
            let c = self.coord(v, a);
            c == 0 || c + 1 == self.sides[a]
        })
    }

    pub fn cluster(&self, v: usize) -> u32 {
        self.labels[v]
    }

    pub fn cluster_size(&self, v: usize) -> usize {
        self.cluster_size[self.labels[v] as usize] as usize
    }

    pub fn largest_cluster(&self) -> u32 {
        self.largest
    }

    pub fn largest_cluster_size(&self) -> usize {
        self.cluster_size[self.largest as usize] as usize
    }

    pub fn in_largest(&self, v: usize) -> bool {
        self.labels[v] == self.largest
    }

    /// Copy with one edge switched.
    pub fn with_edge(&self, v: usize, axis: usize, open: bool) -> Self {
        let mut bits = self.bits.clone();
        if self.coord(v, axis) + 1 < self.sides[axis] {
            let b = v * self.d + axis;
            if open {
                bits[b / 64] |= 1 << (b % 64);
            } else {
                bits[b / 64] &= !(1 << (b % 64));
            }
        }
        Self::labelled(self.d, self.sides.clone(), self.strides.clone(), self.p, self.seed.clone(), bits)
    }

    /// Little-endian layout: magic `PBX1`, `u32 d`, `d x u32` sides, `f64 p`,
    /// `u64` seed root, `u32` path length, path as `u64`s, then the edge
    /// bits packed LSB-first into bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        for &s in &self.sides {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.p.to_le_bytes());
        out.extend_from_slice(&self.seed.root().to_le_bytes());
        out.extend_from_slice(&(self.seed.path().len() as u32).to_le_bytes());
        for &k in self.seed.path() {
            out.extend_from_slice(&k.to_le_bytes());
        }
        let nbits = self.n_vertices() * self.d;
        out.extend(self.bits.iter().flat_map(|w| w.to_le_bytes()).take(nbits.div_ceil(8)));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PercError> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(PercError::Format("bad magic"));
        }
        let d = r.u32()? as usize;
        if d > 64 {
            return Err(PercError::Format("dimension"));
        }
        let sides: Vec<usize> = (0..d).map(|_| r.u32().map(|s| s as usize)).collect::<Result<_, _>>()?;
        let p = f64::from_le_bytes(r.take(8)?.try_into().map_err(|_| PercError::Format("p"))?);
        let root = r.u64()?;
        let depth = r.u32()?;
        let mut seed = SeedTree::new(root);
        for _ in 0..depth {
            seed = seed.child(r.u64()?);
        }
        let n = check_shape(d, &sides)?;
        let body = r.take((n * d).div_ceil(8))?;
        if r.at != bytes.len() {
            return Err(PercError::Format("trailing bytes"));
        }
        let mut bits = vec![0u64; (n * d).div_ceil(64)];
        for (i, &byte) in body.iter().enumerate() {
            bits[i / 8] |= (byte as u64) << (8 * (i % 8));
        }
        let probe = PercBox::from_edges(d, &sides, p, seed.clone(), |_, _| false)?;
        // reject bits on edges that leave the box
        for (w, (&got, _)) in bits.iter().zip(&probe.bits).enumerate() {
            let mut rest = got;
            while rest != 0 {
                let b = w * 64 + rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if b >= n * d || probe.coord(b / d, b % d) + 1 >= sides[b % d] {
                    return Err(PercError::Format("edge bit outside the box"));
                }
            }
        }
        Ok(Self::labelled(d, sides, probe.strides, p, seed, bits))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], PercError> {
        let end = self.at.checked_add(k).filter(|&e| e <= self.bytes.len()).ok_or(PercError::Format("truncated"))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, PercError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().map_err(|_| PercError::Format("u32"))?))
    }

    fn u64(&mut self) -> Result<u64, PercError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().map_err(|_| PercError::Format("u64"))?))
    }
}

/// Row-major odometer.
fn advance(coords: &mut [usize], sides: &[usize]) {
    for a in (0..coords.len()).rev() {
        coords[a] += 1;
        if coords[a] < sides[a] {
            return;
        }
        coords[a] = 0;
    }
}

/// Transition probabilities at `v`; a vertex with no open edge keeps the
/// walk in place.
pub fn transition_probs(pbox: &PercBox, bias: &BiasVector, v: usize) -> Vec<(usize, f64)> {
    let weights: Vec<(usize, f64)> = pbox
        .neighbours(v)
        .map(|(w, a, s)| (w, (bias.lambda * bias.direction[a] * s as f64).exp()))
        .collect();
    if weights.is_empty() {
        return vec![(v, 1.0)];
    }
    let total: f64 = weights.iter().map(|w| w.1).sum();
    weights.into_iter().map(|(w, c)| (w, c / total)).collect()
}

/// `ln pi(x)` with `pi(x) = sum_y c(x, y)`, `c(x, y) = exp((x + y) . l)`.
pub fn log_invariant_measure(pbox: &PercBox, bias: &BiasVector, v: usize) -> f64 {
    let x = pbox.coords(v);
    let dot = |c: &[usize]| -> f64 { c.iter().zip(&bias.direction).map(|(&c, l)| c as f64 * l).sum::<f64>() * bias.lambda };
    let base = 2.0 * dot(&x);
    let terms: Vec<f64> = pbox.neighbours(v).map(|(w, _, _)| dot(&x) + dot(&pbox.coords(w)) - base).collect();
    if terms.is_empty() {
        return f64::NEG_INFINITY;
    }
    base + terms.iter().map(|t| t.exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PercWalkBudget {
    pub max_steps: u64,
    /// Stop once `(X_t - X_0) . direction >= max_level`.
    pub max_level: Option<u32>,
    /// Sample the projection every `record_every` steps (0 disables).
    pub record_every: u64,
    /// Keep every visited vertex.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercWalkRecord {
    /// `(X_t - X_0) . direction` at multiples of `record_every`.
    pub projections: Vec<f64>,
    /// First time the projection reaches `1, 2, ...`.
    pub hitting_times: Vec<u64>,
    pub trace: Vec<usize>,
    pub steps: u64,
    pub final_vertex: usize,
    pub final_projection: f64,
    /// The walk reached the box boundary and was stopped there.
    pub exited: bool,
}

pub fn conductance_walk(
    pbox: &PercBox,
    bias: &BiasVector,
    start: usize,
    budget: PercWalkBudget,
    rng: &mut Stream,
) -> Result<PercWalkRecord, PercError> {
    if bias.direction.len() != pbox.d {
        return Err(PercError::Direction);
    }
    if !pbox.in_largest(start) {
        return Err(PercError::NotInLargest);
    }
    let d = pbox.d;
    // per-step weights exp(+-lambda l_a); the exp(2 x.l) factor cancels
    let up: Vec<f64> = bias.direction.iter().map(|l| (bias.lambda * l).exp()).collect();
    let down: Vec<f64> = up.iter().map(|w| 1.0 / w).collect();
    let step_proj: Vec<f64> = bias.direction.clone();
    let mut rec = PercWalkRecord {
        projections: Vec::new(),
        hitting_times: Vec::new(),
        trace: Vec::new(),
        steps: 0,
        final_vertex: start,
        final_projection: 0.0,
        exited: false,
    };
    let mut v = start;
    let mut proj = 0.0f64;
    let mut t = 0u64;
    let mut opts: Vec<(usize, usize, i8, f64)> = Vec::with_capacity(2 * d);
    loop {
        if budget.trace {
            rec.trace.push(v);
        }
        if budget.record_every > 0 && t.is_multiple_of(budget.record_every) {
            rec.projections.push(proj);
        }
        if t >= budget.max_steps || budget.max_level.is_some_and(|l| proj >= l as f64 - 1e-9) {
            break;
        }
        if t > 0 && pbox.is_boundary(v) {
            rec.exited = true;
            break;
        }
        opts.clear();
        opts.extend(pbox.neighbours(v).map(|(w, a, s)| (w, a, s, if s > 0 { up[a] } else { down[a] })));
        if opts.is_empty() {
            // isolated vertex: the walk stays put for the rest of the budget
            t = budget.max_steps;
            continue;
        }
        let total: f64 = opts.iter().map(|o| o.3).sum();
        let mut y = rng.random::<f64>() * total;
        let mut pick = opts[opts.len() - 1];
        for o in &opts {
            y -= o.3;
            if y < 0.0 {
                pick = *o;
                break;
            }
        }
        v = pick.0;
        proj += step_proj[pick.1] * pick.2 as f64;
        t += 1;
        while (rec.hitting_times.len() as f64) + 1.0 <= proj + 1e-9 {
            rec.hitting_times.push(t);
        }
    }
    rec.steps = t;
    rec.final_vertex = v;
    rec.final_projection = proj;
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    cost: f64,
    len: u32,
    v: u32,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.len.cmp(&other.len)).then(self.v.cmp(&other.v))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Smallest, over open paths from `x` to the box boundary, of the largest
/// retreat `(x - v) . direction` along the path. `None` when no open path
/// reaches the boundary.
pub fn backtrack(pbox: &PercBox, x: usize, direction: &[f64]) -> Option<f64> {
    let xc = pbox.coords(x);
    let retreat = |v: usize| -> f64 {
        pbox.coords(v).iter().zip(&xc).zip(direction).map(|((&c, &x0), l)| (x0 as f64 - c as f64) * l).sum()
    };
    let mut best = vec![f64::INFINITY; pbox.n_vertices()];
    let mut heap = BinaryHeap::new();
    best[x] = 0.0;
    heap.push(Reverse(Key { cost: 0.0, len: 0, v: x as u32 }));
    while let Some(Reverse(Key { cost, len, v })) = heap.pop() {
        let v = v as usize;
        if cost > best[v] {
            continue;
        }
        if pbox.is_boundary(v) {
            return Some(cost);
        }
        for (w, _, _) in pbox.neighbours(v) {
            let c = cost.max(retreat(w));
            if c < best[w] {
                best[w] = c;
                heap.push(Reverse(Key { cost: c, len: len + 1, v: w as u32 }));
            }
        }
    }
    None
}

/// Tail of `BK(0)` on boxes of side `4 n_max + 1` centred at the origin, and
/// the log-linear fit `ln P[BK > n] ~ -zeta n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub zeta: EstimateReport,
    pub r2: f64,
    pub lambda_c: f64,
    /// `(n, count of BK > n, P[BK > n])` for `n = 2..=n_max`.
    pub tail: Vec<(u32, u64, f64)>,
    /// Boxes whose origin reaches the boundary.
    pub valid: usize,
    pub boxes: usize,
    /// Fewer than 30 exceedances at `n_max`.
    pub sparse_tail: bool,
    /// Grid points with at least one exceedance (the ones fitted).
    pub fitted_points: usize,
}

impl ZetaEstimate {
    /// `zeta / (2 lambda)`.
    pub fn alpha(&self, lambda: f64) -> f64 {
        self.zeta.estimate / (2.0 * lambda)
    }
}

/// `p_c` for bond percolation; only `d = 2` is known here.
pub fn critical_threshold(d: usize) -> Option<f64> {
    (d == 2).then_some(0.5)
}

pub fn zeta_estimate(
    d: usize,
    p: f64,
    direction: &[f64],
    n_max: u32,
    boxes: usize,
    p_c: Option<f64>,
    seed: &SeedTree,
) -> Result<ZetaEstimate, PercError> {
    let p_c = p_c.or_else(|| critical_threshold(d)).ok_or(PercError::UnknownThreshold)?;
    if !(p > p_c) {
        return Err(PercError::Subcritical { p, p_c });
    }
    BiasVector::new(1.0, direction.to_vec())?;
    if direction.len() != d || n_max < 3 {
        return Err(PercError::Argument("direction must have length d and n_max >= 3"));
    }
    let side = 4 * n_max as usize + 1;
    let sides = vec![side; d];
    let values: Vec<Option<f64>> = run_replicas(seed, boxes, |_, s| {
        let pbox = gen_percbox(d, &sides, p, s).ok()?;
        let centre = pbox.index(&vec![side / 2; d]);
        backtrack(&pbox, centre, direction)
    });
    let bks: Vec<f64> = values.into_iter().flatten().collect();
    let valid = bks.len();
    if valid == 0 {
        return Err(PercError::Argument("no box had an origin connected to the boundary"));
    }
    let tail: Vec<(u32, u64, f64)> = (2..=n_max)
        .map(|n| {
            let c = bks.iter().filter(|&&b| b > n as f64 + 1e-9).count() as u64;
            (n, c, c as f64 / valid as f64)
        })
        .collect();
    let used: Vec<&(u32, u64, f64)> = tail.iter().filter(|t| t.1 > 0).collect();
    if used.len() < 3 {
        return Err(StatError::TooFew { need: 3, got: used.len() }.into());
    }
    let xs: Vec<f64> = used.iter().map(|t| t.0 as f64).collect();
    let ys: Vec<f64> = used.iter().map(|t| t.2.ln()).collect();
    // Var(ln P) ~ 1/count
    let ws: Vec<f64> = used.iter().map(|t| t.1 as f64).collect();
    let fit = estat::wls_line(&xs, &ys, Some(&ws))?;
    let zeta = EstimateReport::normal(-fit.slope, fit.slope_se, valid, "bk-tail-wls").with_seed(seed);
    Ok(ZetaEstimate {
        lambda_c: zeta.estimate / 2.0,
        zeta,
        r2: fit.r2,
        sparse_tail: tail.last().is_none_or(|t| t.1 < 30),
        fitted_points: used.len(),
        tail,
        valid,
        boxes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurveConfig {
    pub d: usize,
    pub p: f64,
    pub direction: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub steps: u64,
    pub replicas: usize,
    /// Levels for the `ln Delta_n` against `ln n` slope; empty skips it.
    pub levels: Vec<u32>,
    /// Step cap for the level walk.
    pub level_step_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedRow {
    pub lambda: f64,
    /// `X_n . direction / n` after a 10% burn-in, over replicas that stayed
    /// inside their box.
    pub speed: Option<EstimateReport>,
    pub hitting_slope: Option<EstimateReport>,
    /// Replicas with a walk stopped at the box boundary; excluded.
    pub exited: usize,
    /// Level walks that used up their step cap before the top level.
    pub incomplete: usize,
    pub replicas: usize,
}

/// Box for a walk of `spread` diffusive steps from an interior start, with
/// extra room for `reach` along the bias.
fn walk_geometry(direction: &[f64], spread: u64, reach: u64) -> (Vec<usize>, Vec<usize>) {
    let margin = 4 * (spread as f64).sqrt().ceil() as usize + 8;
    let mut sides = Vec::with_capacity(direction.len());
    let mut start = Vec::with_capacity(direction.len());
    for &l in direction {
        let ahead = (reach as f64 * l.abs()).ceil() as usize;
        let (back, fwd) = if l >= 0.0 { (margin, margin + ahead) } else { (margin + ahead, margin) };
        sides.push(back + fwd + 1);
        start.push(back);
    }
    (sides, start)
}

/// Fresh box per attempt until the start lands in the largest cluster.
fn box_with_start(
    d: usize,
    sides: &[usize],
    start: &[usize],
    p: f64,
    seed: &SeedTree,
) -> Result<(PercBox, usize), PercError> {
    for attempt in 0..1000 {
        let pbox = gen_percbox(d, sides, p, &seed.child(attempt))?;
        let v = pbox.index(start);
        if pbox.in_largest(v) {
            return Ok((pbox, v));
        }
    }
    Err(PercError::NotInLargest)
}

pub fn speed_curve(cfg: &SpeedCurveConfig, seed: &SeedTree) -> Result<Vec<SpeedRow>, PercError> {
    if cfg.steps < 10 || cfg.replicas < 2 {
        return Err(PercError::Argument("need at least 10 steps and 2 replicas"));
    }
    if cfg.levels.windows(2).any(|w| w[1] <= w[0]) || cfg.levels.first().is_some_and(|&l| l == 0) {
        return Err(PercError::Argument("levels must be positive and increasing"));
    }
    if !(cfg.p > 0.0 && cfg.p < 1.0) {
        return Err(PercError::Retention(cfg.p));
    }
    let burn = cfg.steps / 10;
    let top = cfg.levels.last().copied();
    let reach = cfg.steps.max(top.unwrap_or(0) as u64);
    // level walks spend most of their time in traps; 16 n free steps is ample
    let spread = cfg.steps.max(16 * top.unwrap_or(0) as u64);
    let (sides, start) = walk_geometry(&cfg.direction, spread, reach);
    cfg.lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let bias = BiasVector::new(lambda, cfg.direction.clone())?;
            let s = seed.child(i as u64);
            type Pair = (PercWalkRecord, Option<PercWalkRecord>);
            let runs = run_replicas(&s.child(0), cfg.replicas, |_, r| -> Result<Pair, PercError> {
                let (pbox, v) = box_with_start(cfg.d, &sides, &start, cfg.p, &r.child(0))?;
                let budget = PercWalkBudget { max_steps: cfg.steps, max_level: None, record_every: burn, trace: false };
                let walk = conductance_walk(&pbox, &bias, v, budget, &mut r.child(1).stream())?;
                let levels = match top {
                    Some(t) => {
                        let budget =
                            PercWalkBudget { max_steps: cfg.level_step_cap, max_level: Some(t), record_every: 0, trace: false };
                        Some(conductance_walk(&pbox, &bias, v, budget, &mut r.child(2).stream())?)
                    }
                    None => None,
                };
                Ok((walk, levels))
            });
            let runs: Vec<Pair> = runs.into_iter().collect::<Result<_, _>>()?;
            let kept: Vec<&PercWalkRecord> = runs.iter().map(|r| &r.0).filter(|r| !r.exited).collect();
            let level_runs: Vec<&PercWalkRecord> = runs.iter().filter_map(|r| r.1.as_ref()).filter(|r| !r.exited).collect();
            let speeds: Vec<f64> = kept
                .iter()
                .map(|r| (r.final_projection - r.projections.get(1).copied().unwrap_or(0.0)) / (cfg.steps - burn) as f64)
                .collect();
            let speed = (speeds.len() >= 2).then(|| estat::mean_report(&speeds, "perc-speed").map(|r| r.with_seed(&s))).transpose()?;
            let hitting_slope = match top {
                Some(_) if level_runs.len() >= 2 && cfg.levels.len() >= 3 => {
                    let rows: Vec<Vec<f64>> = level_runs
                        .iter()
                        .map(|r| {
                            cfg.levels
                                .iter()
                                .map(|&l| r.hitting_times.get(l as usize - 1).map_or(cfg.level_step_cap as f64, |&t| t as f64))
                                .collect()
                        })
                        .collect();
                    let grid: Vec<f64> = cfg.levels.iter().map(|&l| l as f64).collect();
                    Some(estat::loglog_slope_replicas(&grid, &rows, Centre::Median, 1000, &s.child(1))?)
                }
                _ => None,
            };
            let exited = runs.iter().filter(|r| r.0.exited || r.1.as_ref().is_some_and(|l| l.exited)).count();
            let incomplete = level_runs.iter().filter(|r| r.hitting_times.len() < top.unwrap_or(0) as usize).count();
            Ok(SpeedRow { lambda, speed, hitting_slope, exited, incomplete, replicas: runs.len() })
        })
        .collect()
}
