use serde::{Deserialize, Serialize};

use super::law::{AtomLaw, OffspringLaw};
use super::GwError;

const FIXED_POINT_TOL: f64 = 1e-12;

/// Smallest fixed point of `f` in `[0, 1]`. `supercritical = false` means the
/// tree dies out almost surely and `q = 1` was returned without solving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    pub q: f64,
    pub supercritical: bool,
}

pub fn extinction_prob(law: &OffspringLaw) -> Extinction {
    if !law.is_supercritical() {
        return Extinction { q: 1.0, supercritical: false };
    }
    if !law.has_leaves() {
        return Extinction { q: 0.0, supercritical: true };
    }
    // f is increasing and convex, so iterates from 0 climb to the smallest root
    let mut q = 0.0;
    for _ in 0..1_000_000 {
        let next = law.f(q);
        let done = (next - q).abs() < FIXED_POINT_TOL;
        q = next;
        if done {
            break;
        }
    }
    let slope = law.f_prime(q) - 1.0;
    if slope < 0.0 {
        let polished = q - (law.f(q) - q) / slope;
        if (0.0..1.0).contains(&polished) {
            q = polished;
        }
    }
    Extinction { q, supercritical: true }
}

/// `1/f'(q)`; absent for leafless or non-supercritical laws.
pub fn critical_bias(law: &OffspringLaw) -> Option<f64> {
    if !law.has_leaves() || !law.is_supercritical() {
        return None;
    }
    Some(1.0 / law.f_prime(extinction_prob(law).q))
}

/// Backbone law `g` and trap law `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarrisSplit {
    pub q: f64,
    pub g: OffspringLaw,
    pub h: Option<OffspringLaw>,
}

pub fn harris_split(law: &OffspringLaw) -> Result<HarrisSplit, GwError> {
    if !law.is_supercritical() {
        return Err(GwError::NotSupercritical(law.mean()));
    }
    let q = extinction_prob(law).q;
    if q == 0.0 {
        return Ok(HarrisSplit { q, g: law.clone(), h: None });
    }
    let p = law.pmf();
    let top = law.max_degree();
    // coefficient of s^k in f((1-q)s + q), k >= 1; the constant term is f(q) - q = 0
    let mut g = vec![0.0; top + 1];
    for (k, gk) in g.iter_mut().enumerate().skip(1) {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for (j, &pj) in p.iter().enumerate().skip(k) {
            if j > k {
                binom = binom * j as f64 / (j - k) as f64;
            }
            acc += pj * binom * q.powi((j - k) as i32);
        }
        *gk = acc * (1.0 - q).powi(k as i32 - 1);
    }
    let h: Vec<f64> = p.iter().enumerate().map(|(k, &pk)| pk * q.powi(k as i32 - 1)).collect();
    Ok(HarrisSplit { q, g: OffspringLaw::normalized(g), h: Some(OffspringLaw::normalized(h)) })
}

/// CLT variance of `|X_n|` on a leafless tree at `beta = 1`.
pub fn leafless_sigma2(law: &OffspringLaw) -> Result<f64, GwError> {
    if law.has_leaves() {
        return Err(GwError::HasLeaves);
    }
    let m = law.mean();
    if !(m > 1.0) {
        return Err(GwError::NotSupercritical(m));
    }
    Ok(m * m * (m - 1.0) / (law.second_moment() - m))
}

/// `ln beta_c / ln beta`.
pub fn alpha_tree(law: &OffspringLaw, beta: f64) -> Result<f64, GwError> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(GwError::Bias(beta));
    }
    let beta_c = critical_bias(law).ok_or(if law.has_leaves() {
        GwError::NotSupercritical(law.mean())
    } else {
        GwError::Leafless
    })?;
    Ok(beta_c.ln() / beta.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomBiasAlpha {
    pub alpha: f64,
    /// Lattice span of `ln nu`; `None` when non-lattice.
    pub lattice_span: Option<f64>,
}

/// Root of `E_nu[Y^alpha] = 1/f'(q)`.
pub fn random_bias_alpha(law: &OffspringLaw, nu: &AtomLaw) -> Result<RandomBiasAlpha, GwError> {
    if !(nu.min() > 1.0) {
        return Err(GwError::Bias(nu.min()));
    }
    let target = critical_bias(law).ok_or(if law.has_leaves() {
        GwError::NotSupercritical(law.mean())
    } else {
        GwError::Leafless
    })?;
    let alpha = level_crossing(|t| nu.moment(t), target, 1.0).ok_or(GwError::Argument("no root"))?;
    Ok(RandomBiasAlpha { alpha, lattice_span: nu.log_lattice_span() })
}

/// `alpha_1 = Leb{t >= 0 : E[A^t] <= 1/p1}`, `alpha_2` the same on `t <= 0`,
/// `alpha = alpha_1 + alpha_2`. All infinite when `p1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeAlpha {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha: f64,
}

pub fn pipe_alpha(law: &OffspringLaw, a_law: &AtomLaw) -> PipeAlpha {
    let p1 = law.prob(1);
    if p1 == 0.0 {
        return PipeAlpha { alpha1: f64::INFINITY, alpha2: f64::INFINITY, alpha: f64::INFINITY };
    }
    let target = 1.0 / p1;
    // E[A^t] is convex with E[A^0] = 1 <= target, so each side is [0, t*]
    let side = |dir: f64| {
        let grows = if dir > 0.0 { a_law.max() > 1.0 } else { a_law.min() < 1.0 };
        if !grows {
            return f64::INFINITY;
        }
        level_crossing(|t| a_law.moment(dir * t), target, 1.0).unwrap_or(f64::INFINITY)
    };
    let (alpha1, alpha2) = (side(1.0), side(-1.0));
    PipeAlpha { alpha1, alpha2, alpha: alpha1 + alpha2 }
}

/// Largest `t >= 0` with `phi(t) <= target`, for convex `phi` with
/// `phi(0) <= target` and `phi -> inf`. Bracket from `start`, then bisect.
fn level_crossing(phi: impl Fn(f64) -> f64, target: f64, start: f64) -> Option<f64> {
    if phi(0.0) > target {
        return None;
    }
    let mut hi = start;
    while phi(hi) <= target {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    // the sublevel set is an interval containing 0, so [0, hi] brackets its end
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Everything the generating function gives about a law in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct GwAnalytics {
    pub mean: f64,
    pub q: f64,
    pub supercritical: bool,
    pub f_prime_q: f64,
    pub beta_c: Option<f64>,
    pub split: Option<HarrisSplit>,
    pub sigma2: Option<f64>,
}

impl GwAnalytics {
    pub fn new(law: &OffspringLaw) -> Self {
        let ext = extinction_prob(law);
        Self {
            mean: law.mean(),
            q: ext.q,
            supercritical: ext.supercritical,
            f_prime_q: law.f_prime(ext.q),
            beta_c: critical_bias(law),
            split: harris_split(law).ok(),
            sigma2: leafless_sigma2(law).ok(),
        }
    }
}
