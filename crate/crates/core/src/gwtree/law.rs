use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GwError;
use crate::randkit;

const NORM_TOL: f64 = 1e-12;

/// Offspring distribution with finite support `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl OffspringLaw {
    /// Trailing zeros are dropped. The masses must sum to 1 within `1e-12`.
    pub fn new(mut pmf: Vec<f64>) -> Result<Self, GwError> {
        if let Some((index, &value)) = pmf.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(GwError::BadMass { index, value });
        }
        while pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        if pmf.is_empty() {
            return Err(GwError::EmptyPmf);
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(GwError::NotNormalized(total));
        }
        Ok(Self::normalized(pmf))
    }

    /// From `(k, p_k)` pairs; repeated `k` accumulate.
    pub fn from_atoms(atoms: &[(usize, f64)]) -> Result<Self, GwError> {
        let top = atoms.iter().map(|a| a.0).max().ok_or(GwError::EmptyPmf)?;
        let mut pmf = vec![0.0; top + 1];
        for &(k, p) in atoms {
            pmf[k] += p;
        }
        Self::new(pmf)
    }

    /// `Z = d` almost surely.
    pub fn fixed(d: usize) -> Self {
        let mut pmf = vec![0.0; d + 1];
        pmf[d] = 1.0;
        Self::normalized(pmf)
    }

    /// Rescales away rounding error from derived laws.
    pub(crate) fn normalized(mut pmf: Vec<f64>) -> Self {
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        let total: f64 = pmf.iter().sum();
        for p in &mut pmf {
            *p /= total;
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self { pmf, cdf }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// `f(s) = sum p_k s^k` by Horner.
    pub fn f(&self, s: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, p| acc * s + p)
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        self.pmf.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, p)| acc * s + k as f64 * p)
    }

    pub fn is_supercritical(&self) -> bool {
        self.mean() > 1.0
    }

    pub fn has_leaves(&self) -> bool {
        self.pmf[0] > 0.0
    }

    /// Law of `k p_k / m`; needs `m > 0`.
    pub fn size_biased(&self) -> Result<Self, GwError> {
        let m = self.mean();
        if !(m > 0.0) {
            return Err(GwError::Argument("size-biasing needs a positive mean"));
        }
        Ok(Self::normalized(self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p / m).collect()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.cdf.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// Finite-atom law on `(0, inf)`, used for edge biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomLaw {
    atoms: Vec<(f64, f64)>,
}

impl AtomLaw {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, GwError> {
        if atoms.is_empty() {
            return Err(GwError::AtomLaw("no atoms"));
        }
        if atoms.iter().any(|&(v, p)| !(v.is_finite() && v > 0.0) || !(p.is_finite() && p >= 0.0)) {
            return Err(GwError::AtomLaw("atoms must be finite and positive, masses non-negative"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(GwError::NotNormalized(total));
        }
        Ok(Self { atoms })
    }

    pub fn point(value: f64) -> Result<Self, GwError> {
        Self::new(vec![(value, 1.0)])
    }

    /// Equal mass on each value.
    pub fn uniform(values: &[f64]) -> Result<Self, GwError> {
        let p = 1.0 / values.len().max(1) as f64;
        Self::new(values.iter().map(|&v| (v, p)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `E[A^t]`.
    pub fn moment(&self, t: f64) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * v.powf(t)).sum()
    }

    pub fn min(&self) -> f64 {
        self.support().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.support().fold(0.0, f64::max)
    }

    fn support(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0)
    }

    /// Lattice span of the logarithms of the charged atoms.
    pub fn log_lattice_span(&self) -> Option<f64> {
        let logs: Vec<f64> = self.support().map(f64::ln).collect();
        randkit::log_lattice_span(&logs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        for &(v, p) in &self.atoms {
            if u < p {
                return v;
            }
            u -= p;
        }
        self.support().last().unwrap_or(self.atoms[0].0)
    }
}

/// Walk bias: one `beta` for every edge, or i.i.d. edge biases from `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BiasSpec {
    Fixed(f64),
    Random(AtomLaw),
}

impl BiasSpec {
    pub fn fixed(beta: f64) -> Result<Self, GwError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(GwError::Bias(beta));
        }
        Ok(Self::Fixed(beta))
    }

    /// Every atom must exceed 1.
    pub fn random(nu: AtomLaw) -> Result<Self, GwError> {
        let low = nu.min();
        if !(low > 1.0) {
            return Err(GwError::Bias(low));
        }
        Ok(Self::Random(nu))
    }
}
