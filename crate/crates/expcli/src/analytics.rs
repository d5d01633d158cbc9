//! Closed-form quantities of an offspring law, for the `analytics` command.

use serde::Serialize;

use rwrelab::gwtree::{self, OffspringLaw};

use crate::CliError;

/// Parses `"3/5"` or `"0.6"`.
pub fn parse_prob(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("not a probability: {s}"));
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            n / d
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub pmf: Vec<f64>,
    pub m: f64,
    pub variance: f64,
    pub q: f64,
    pub f_prime_q: f64,
    pub beta_c: Option<f64>,
    /// Backbone law `g` and trap law `h`.
    pub harris_g: Option<Vec<f64>>,
    pub harris_h: Option<Vec<f64>>,
    /// Speed variance of the unbiased walk; leafless laws only.
    pub sigma2: Option<f64>,
    pub beta: Option<f64>,
    /// `ln beta_c / ln beta`, when `beta > beta_c`.
    pub alpha: Option<f64>,
}

pub fn law_report(pmf: &[f64], beta: Option<f64>) -> Result<LawReport, CliError> {
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(CliError::Config(format!("pmf sums to {sum}, not 1")));
    }
    let law = OffspringLaw::new(pmf.to_vec()).map_err(|e| CliError::Config(e.to_string()))?;
    let a = gwtree::GwAnalytics::new(&law);
    let alpha = match (beta, a.beta_c) {
        (Some(b), Some(c)) if b > c => gwtree::alpha_tree(&law, b).ok(),
        _ => None,
    };
    Ok(LawReport {
        pmf: law.pmf().to_vec(),
        m: a.mean,
        variance: law.variance(),
        q: a.q,
        f_prime_q: a.f_prime_q,
        beta_c: a.beta_c,
        harris_g: a.split.as_ref().map(|s| s.g.pmf().to_vec()),
        harris_h: a.split.as_ref().and_then(|s| s.h.as_ref().map(|h| h.pmf().to_vec())),
        sigma2: a.sigma2,
        beta,
        alpha,
    })
}
