//! Estimators shared by the experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::randkit::SeedTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatError {
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("k fraction {0} outside (0, 0.2]")]
    KFraction(f64),
    #[error("ties among the top order statistics")]
    TiesAtTop,
    #[error("non-positive value {0} in log-log regression")]
    NonPositive(f64),
    #[error("inputs have mismatched lengths")]
    Length,
    #[error("degenerate design: all abscissae equal")]
    Degenerate,
}

/// Point estimate with its uncertainty and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub replicas: usize,
    pub seed: Option<String>,
    pub method: String,
}

const Z95: f64 = 1.959_963_984_540_054;

impl EstimateReport {
    /// Normal-theory 95% interval around `estimate`.
    pub fn normal(estimate: f64, stderr: f64, replicas: usize, method: &str) -> Self {
        Self {
            estimate,
            stderr,
            ci_lo: estimate - Z95 * stderr,
            ci_hi: estimate + Z95 * stderr,
            replicas,
            seed: None,
            method: method.to_string(),
        }
    }

    pub fn with_seed(mut self, seed: &SeedTree) -> Self {
        self.seed = Some(seed.to_string());
        self
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_lo <= x && x <= self.ci_hi
    }

    pub fn overlaps(&self, other: &EstimateReport) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample mean with a normal 95% interval.
pub fn mean_report(xs: &[f64], method: &str) -> Result<EstimateReport, StatError> {
    if xs.is_empty() {
        return Err(StatError::TooFew { need: 1, got: 0 });
    }
    let se = (variance(xs) / xs.len() as f64).sqrt();
    Ok(EstimateReport::normal(mean(xs), se, xs.len(), method))
}

/// Linear interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Each value divided by the sample median.
pub fn median_normalized(xs: &[f64]) -> Vec<f64> {
    let m = median(xs);
    xs.iter().map(|x| x / m).collect()
}

/// Hill estimator over the top `k = floor(k_fraction * n)` order statistics.
pub fn hill_tail_index(samples: &[f64], k_fraction: f64) -> Result<EstimateReport, StatError> {
    if samples.len() < 500 {
        return Err(StatError::TooFew { need: 500, got: samples.len() });
    }
    if !(k_fraction > 0.0 && k_fraction <= 0.2) {
        return Err(StatError::KFraction(k_fraction));
    }
    let k = ((k_fraction * samples.len() as f64).floor() as usize).max(2);
    let mut v = samples.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let threshold = v[k];
    if v[0] == threshold || threshold <= 0.0 {
        return Err(StatError::TiesAtTop);
    }
    let sum: f64 = v[..k].iter().map(|x| (x / threshold).ln()).sum();
    let alpha = k as f64 / sum;
    Ok(EstimateReport::normal(alpha, alpha / (k as f64).sqrt(), samples.len(), "hill"))
}

/// Hill estimates at 0.5%, 1% and 2% of the sample.
pub fn hill_sweep(samples: &[f64]) -> Result<Vec<(f64, EstimateReport)>, StatError> {
    [0.005, 0.01, 0.02]
        .iter()
        .map(|&f| hill_tail_index(samples, f).map(|r| (f, r)))
        .collect()
}

/// Sup distance between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sup distance between the empirical CDF of `xs` and a continuous `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Weighted least squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
}

pub fn wls_line(x: &[f64], y: &[f64], w: Option<&[f64]>) -> Result<LineFit, StatError> {
    if x.len() != y.len() || w.is_some_and(|w| w.len() != x.len()) {
        return Err(StatError::Length);
    }
    if x.len() < 2 {
        return Err(StatError::TooFew { need: 2, got: x.len() });
    }
    let wt = |i: usize| w.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..x.len()).map(wt).sum();
    let mx = (0..x.len()).map(|i| wt(i) * x[i]).sum::<f64>() / sw;
    let my = (0..x.len()).map(|i| wt(i) * y[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..x.len()).map(|i| wt(i) * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| wt(i) * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = (0..x.len()).map(|i| wt(i) * (y[i] - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(StatError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..x.len()).map(|i| wt(i) * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let dof = x.len().saturating_sub(2).max(1) as f64;
    let slope_se = (rss / dof / sxx).sqrt();
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(LineFit { slope, intercept, slope_se, r2 })
}

fn log_pairs(points: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>), StatError> {
    let mut lx = Vec::with_capacity(points.len());
    let mut ly = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if !(n > 0.0) {
            return Err(StatError::NonPositive(n));
        }
        if !(v > 0.0) {
            return Err(StatError::NonPositive(v));
        }
        lx.push(n.ln());
        ly.push(v.ln());
    }
    Ok((lx, ly))
}

/// Slope of `ln value` against `ln n` by weighted least squares.
pub fn loglog_slope(points: &[(f64, f64)], weights: Option<&[f64]>) -> Result<EstimateReport, StatError> {
    if points.len() < 3 {
        return Err(StatError::TooFew { need: 3, got: points.len() });
    }
    let (lx, ly) = log_pairs(points)?;
    let fit = wls_line(&lx, &ly, weights)?;
    Ok(EstimateReport::normal(fit.slope, fit.slope_se, points.len(), "loglog-wls"))
}

/// How replicas are summarised at each grid point before regressing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Centre {
    Mean,
    Median,
}

fn centre_of(values: &mut [f64], centre: Centre) -> f64 {
    match centre {
        Centre::Mean => mean(values),
        Centre::Median => {
            values.sort_by(f64::total_cmp);
            quantile_sorted(values, 0.5)
        }
    }
}

/// Log-log slope of a per-grid-point centre across replicas with a percentile
/// bootstrap interval. `rows[r][g]` is replica `r` at `grid[g]`.
pub fn loglog_slope_replicas(
    grid: &[f64],
    rows: &[Vec<f64>],
    centre: Centre,
    resamples: usize,
    seed: &SeedTree,
) -> Result<EstimateReport, StatError> {
    if grid.len() < 3 {
        return Err(StatError::TooFew { need: 3, got: grid.len() });
    }
    if rows.is_empty() {
        return Err(StatError::TooFew { need: 1, got: 0 });
    }
    if rows.iter().any(|r| r.len() != grid.len()) {
        return Err(StatError::Length);
    }
    let slope_of = |pick: &[usize]| -> Result<f64, StatError> {
        let mut col = Vec::with_capacity(pick.len());
        let pts: Result<Vec<(f64, f64)>, StatError> = grid
            .iter()
            .enumerate()
            .map(|(g, &n)| {
                col.clear();
                col.extend(pick.iter().map(|&r| rows[r][g]));
                Ok((n, centre_of(&mut col, centre)))
            })
            .collect();
        let (lx, ly) = log_pairs(&pts?)?;
        Ok(wls_line(&lx, &ly, None)?.slope)
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    let point = slope_of(&all)?;
    let mut rng = seed.stream();
    let mut boots = Vec::with_capacity(resamples);
    let mut pick = vec![0usize; rows.len()];
    for _ in 0..resamples {
        for p in pick.iter_mut() {
            *p = rng.random_range(0..rows.len());
        }
        // a resample whose centre hits zero somewhere carries no slope
        if let Ok(s) = slope_of(&pick) {
            boots.push(s);
        }
    }
    let method = match centre {
        Centre::Mean => "loglog-mean-bootstrap",
        Centre::Median => "loglog-median-bootstrap",
    };
    let mut rep = bootstrap_summary(point, &mut boots, rows.len(), method);
    rep.seed = Some(seed.to_string());
    Ok(rep)
}

fn bootstrap_summary(point: f64, boots: &mut [f64], replicas: usize, method: &str) -> EstimateReport {
    if boots.is_empty() {
        return EstimateReport::normal(point, f64::INFINITY, replicas, method);
    }
    boots.sort_by(f64::total_cmp);
    let se = variance(boots).sqrt();
    let lo = quantile_sorted(boots, 0.025).min(point);
    let hi = quantile_sorted(boots, 0.975).max(point);
    EstimateReport {
        estimate: point,
        stderr: se,
        ci_lo: lo,
        ci_hi: hi,
        replicas,
        seed: None,
        method: method.to_string(),
    }
}

/// Percentile bootstrap of an arbitrary statistic.
pub fn bootstrap<F: Fn(&[f64]) -> f64>(
    xs: &[f64],
    stat: F,
    resamples: usize,
    seed: &SeedTree,
    method: &str,
) -> EstimateReport {
    let point = stat(xs);
    let mut rng = seed.stream();
    let mut buf = vec![0.0; xs.len()];
    let mut boots: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    let mut rep = bootstrap_summary(point, &mut boots, xs.len(), method);
    rep.seed = Some(seed.to_string());
    rep
}

/// Normal 95% interval for a binomial proportion.
pub fn proportion_report(hits: usize, trials: usize, method: &str) -> EstimateReport {
    let p = hits as f64 / trials.max(1) as f64;
    let se = (p * (1.0 - p) / trials.max(1) as f64).sqrt();
    EstimateReport::normal(p, se, trials, method)
}
