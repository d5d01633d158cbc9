//! Seeded streams, heavy-tailed samplers and stable-law analytics.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The pseudo-random generator handed to every sampler.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RandError {
    #[error("tail index must be positive and finite, got {0}")]
    TailIndex(f64),
    #[error("scale must be positive and finite, got {0}")]
    Scale(f64),
    #[error("stability index must lie in (0, 2], got {0}")]
    StableIndex(f64),
    #[error("skewness must lie in [-1, 1], got {0}")]
    Skew(f64),
    #[error("arcsine parameter must lie in (0, 1), got {0}")]
    ArcsineIndex(f64),
    #[error("argument {0} outside [0, 1]")]
    UnitInterval(f64),
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A root seed plus a path of child indices. Every distinct path names its
/// own generator, so replicas can be scheduled on any number of threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTree {
    root: u64,
    path: Vec<u64>,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root, path: Vec::new() }
    }

    pub fn child(&self, idx: u64) -> Self {
        let mut path = self.path.clone();
        path.push(idx);
        Self { root: self.root, path }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.root;
        let mut acc = splitmix64(&mut state);
        for (depth, &idx) in self.path.iter().enumerate() {
            let mut s = acc ^ idx.wrapping_mul(GOLDEN).rotate_left(depth as u32 % 64 + 1);
            acc = splitmix64(&mut s) ^ splitmix64(&mut s).rotate_left(17);
        }
        let mut out = [0u8; 32];
        let mut s = acc;
        for chunk in out.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        out
    }

    /// A fresh generator for this node. Calling twice gives identical streams.
    pub fn stream(&self) -> Stream {
        ChaCha8Rng::from_seed(self.key())
    }
}

impl fmt::Display for SeedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for idx in &self.path {
            write!(f, "/{idx}")?;
        }
        Ok(())
    }
}

/// Uniform on (0, 1], never zero.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Exact Pareto law: P[X > x] = (x / scale)^(-alpha) for x >= scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    alpha: f64,
    scale: f64,
}

impl TailSpec {
    pub fn new(alpha: f64, scale: f64) -> Result<Self, RandError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(RandError::TailIndex(alpha));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(RandError::Scale(scale));
        }
        Ok(Self { alpha, scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.scale {
            1.0
        } else {
            (x / self.scale).powf(-self.alpha)
        }
    }

    /// Inverse of the survival function on u in (0, 1].
    pub fn quantile_upper(&self, u: f64) -> f64 {
        self.scale * u.powf(-1.0 / self.alpha)
    }
}

pub fn sample_pareto<R: Rng + ?Sized>(spec: &TailSpec, rng: &mut R) -> f64 {
    spec.quantile_upper(open_unit(rng))
}

/// Stable law with characteristic function
/// `exp(i t c - b |t|^alpha (1 + i skew sgn(t) w(t)))`,
/// where `w = -tan(pi alpha / 2)` for `alpha != 1` and `w = (2/pi) ln|t|` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    skew: f64,
    scale: f64,
    location: f64,
}

impl StableParams {
    pub fn new(alpha: f64, skew: f64, scale: f64, location: f64) -> Result<Self, RandError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(RandError::StableIndex(alpha));
        }
        if !(-1.0..=1.0).contains(&skew) {
            return Err(RandError::Skew(skew));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(RandError::Scale(scale));
        }
        Ok(Self { alpha, skew, scale, location })
    }

    /// Totally skewed to the right, unit scale, centred at zero.
    pub fn completely_asymmetric(alpha: f64) -> Result<Self, RandError> {
        Self::new(alpha, 1.0, 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    pub fn is_completely_asymmetric(&self) -> bool {
        self.skew.abs() == 1.0
    }
}

/// Chambers-Mallows-Stuck draw.
pub fn sample_stable<R: Rng + ?Sized>(params: &StableParams, rng: &mut R) -> f64 {
    let StableParams { alpha, skew, scale, location } = *params;
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    // sigma in the textbook S1 parameterization
    let sigma = scale.powf(1.0 / alpha);
    if alpha == 1.0 {
        let lead = FRAC_PI_2 + skew * v;
        let x = (lead * v.tan() - skew * ((FRAC_PI_2 * w * v.cos()) / lead).ln()) / FRAC_PI_2;
        let shift = if sigma > 0.0 { skew * sigma * sigma.ln() / FRAC_PI_2 } else { 0.0 };
        return sigma * x + shift + location;
    }
    let t = skew * (FRAC_PI_2 * alpha).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(0.5 / alpha);
    let arg = alpha * (v + b);
    let x = s * arg.sin() / v.cos().powf(1.0 / alpha)
        * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha);
    sigma * x + location
}

pub fn sample_stable_ca<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64, RandError> {
    let params = StableParams::completely_asymmetric(alpha)?;
    Ok(sample_stable(&params, rng))
}

/// `(a_n, b_n)` with `a_n = inf{x : P[X > x] <= 1/n}` and
/// `b_n = n E[X; X <= a_n]` for `alpha >= 1`; centring is dropped below one.
pub fn normalizing_sequences(spec: &TailSpec, n: u64) -> (f64, f64) {
    let (alpha, s) = (spec.alpha, spec.scale);
    let nf = n.max(1) as f64;
    let a = s * nf.powf(1.0 / alpha);
    let b = if alpha < 1.0 {
        0.0
    } else if alpha == 1.0 {
        nf * s * (a / s).ln()
    } else {
        nf * alpha * s.powf(alpha) / (1.0 - alpha) * (a.powf(1.0 - alpha) - s.powf(1.0 - alpha))
    };
    (a, b)
}

/// CDF of the generalized arcsine law, the regularized incomplete beta `I_x(alpha, 1 - alpha)`.
pub fn arcsine_cdf(alpha: f64, x: f64) -> Result<f64, RandError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RandError::ArcsineIndex(alpha));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(RandError::UnitInterval(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    Ok(statrs::function::beta::beta_reg(alpha, 1.0 - alpha, x).clamp(0.0, 1.0))
}

/// Span `d` such that every nonzero entry of `logs` lies in `d Z`, or `None`
/// when some ratio is not rational with denominator at most 1000 (to `1e-9`).
pub fn log_lattice_span(logs: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = logs.iter().copied().filter(|l| l.abs() > 1e-12).collect();
    let base = *logs.first()?;
    let mut denom_lcm: i64 = 1;
    let mut ratios = Vec::with_capacity(logs.len());
    for &l in &logs {
        let (num, den) = rational_approx(l / base, 1000)?;
        if ((num as f64 / den as f64) - l / base).abs() > 1e-9 {
            return None;
        }
        denom_lcm = lcm(denom_lcm, den);
        ratios.push((num, den));
    }
    let g = ratios.iter().fold(0, |g, &(n, d)| gcd(g, (n * (denom_lcm / d)).abs()));
    Some((base / denom_lcm as f64 * g as f64).abs())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

/// Best rational approximation with bounded denominator (continued fractions).
fn rational_approx(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a as f64;
        if frac.abs() < 1e-12 {
            break;
        }
        y = 1.0 / frac;
    }
    (k1 > 0).then_some((h1, k1))
}
