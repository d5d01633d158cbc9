//! Quick closed-form and determinism checks, each against its own oracle.

use serde::Serialize;

use rwrelab::gwtree::{self, OffspringLaw};
use rwrelab::randkit::{self, TailSpec};
use rwrelab::rwre1d::{self, SiteLaw};

use crate::config::ExperimentConfig;
use crate::experiments;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Smallest root of `f(s) = s` by bisection on a sign change of `f(s) - s`
/// below the first grid point where it turns negative.
fn fixed_point_by_bisection(law: &OffspringLaw) -> f64 {
    let g = |s: f64| law.f(s) - s;
    let n = 10_000;
    let mut hi = 1.0;
    for i in 1..=n {
        let s = i as f64 / n as f64;
        if g(s) < 0.0 {
            hi = s;
            break;
        }
    }
    let mut lo = hi - 1.0 / n as f64;
    if hi == 1.0 {
        return 1.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn pmf_close(a: &[f64], b: &[f64]) -> bool {
    let n = a.len().max(b.len());
    (0..n).all(|i| close(*a.get(i).unwrap_or(&0.0), *b.get(i).unwrap_or(&0.0), 1e-12))
}

fn extinction_checks(out: &mut Vec<Check>) {
    for (name, pmf, q, beta_c) in [
        ("extinction and critical bias, pmf 1/10 0 9/10", vec![0.1, 0.0, 0.9], 1.0 / 9.0, 5.0),
        ("extinction and critical bias, pmf 1/4 1/3 5/12", vec![0.25, 1.0 / 3.0, 5.0 / 12.0], 0.6, 1.2),
    ] {
        let law = OffspringLaw::new(pmf).expect("valid pmf");
        let got_q = gwtree::extinction_prob(&law).q;
        let oracle = fixed_point_by_bisection(&law);
        let got_c = gwtree::critical_bias(&law).unwrap_or(f64::NAN);
        let ok = close(got_q, q, 1e-10) && close(oracle, q, 1e-10) && close(got_c, beta_c, 1e-8);
        out.push(check(name, ok, format!("q = {got_q} (bisection {oracle}), beta_c = {got_c}")));
    }
}

fn harris_check(out: &mut Vec<Check>) {
    let law = OffspringLaw::new(vec![0.1, 0.0, 0.9]).expect("valid pmf");
    let ok = match gwtree::harris_split(&law) {
        Ok(s) => {
            // g_k = sum_j p_j C(j,k) (1-q)^{k-1} q^{j-k} over k >= 1, h_k = p_k q^{k-1}
            let q = s.q;
            let g1 = 0.9 * 2.0 * q;
            let g2 = 0.9 * (1.0 - q);
            let h = [0.1 / q, 0.0, 0.9 * q];
            pmf_close(s.g.pmf(), &[0.0, g1, g2])
                && pmf_close(s.g.pmf(), &[0.0, 0.2, 0.8])
                && s.h.as_ref().is_some_and(|x| pmf_close(x.pmf(), &h) && pmf_close(x.pmf(), &[0.9, 0.0, 0.1]))
        }
        Err(_) => false,
    };
    out.push(check("Harris split, pmf 1/10 0 9/10", ok, "g = {1: 1/5, 2: 4/5}, h = {0: 9/10, 2: 1/10}".into()));
}

fn sigma_checks(out: &mut Vec<Check>) {
    let two = gwtree::leafless_sigma2(&OffspringLaw::fixed(2)).unwrap_or(f64::NAN);
    let mixed = gwtree::leafless_sigma2(&OffspringLaw::new(vec![0.0, 0.5, 0.0, 0.5]).expect("valid pmf"))
        .unwrap_or(f64::NAN);
    let ok = close(two, 2.0, 1e-12) && close(mixed, 4.0 / 3.0, 1e-12);
    out.push(check("leafless speed variance", ok, format!("Z = 2: {two}, p1 = p3 = 1/2: {mixed}")));
}

fn kks_check(out: &mut Vec<Check>) {
    let law = SiteLaw::from_rho(&[(2.0, 0.5), (0.25, 0.5)]).expect("valid law");
    let a = rwre1d::kks_alpha(&law).ok().flatten().unwrap_or(f64::NAN);
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    // 2^a solves x^3 - 2x^2 + 1 = (x - 1)(x^2 - x - 1)
    let x = 2f64.powf(a);
    let ok = close(a, phi.ln() / 2f64.ln(), 1e-9) && close(x * x * x - 2.0 * x * x + 1.0, 0.0, 1e-9);
    out.push(check("KKS exponent of rho in {2, 1/4}", ok, format!("alpha = {a}")));
}

fn normalizing_check(out: &mut Vec<Check>) {
    let spec = TailSpec::new(1.5, 1.0).expect("valid tail");
    let (a, b) = randkit::normalizing_sequences(&spec, 8);
    // a = 8^{2/3}; b = 8 * integral_1^4 x * 1.5 x^{-2.5} dx = 8 * 3 (1 - 1/2)
    let b_oracle = 8.0 * 3.0 * (1.0 - 4f64.powf(-0.5));
    let ok = close(a, 4.0, 1e-12) && close(b, 12.0, 1e-9) && close(b, b_oracle, 1e-9);
    out.push(check("normalizing sequence, alpha 1.5, n 8", ok, format!("({a}, {b})")));
}

fn arcsine_check(out: &mut Vec<Check>) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for i in 1..20 {
        let x = i as f64 / 20.0;
        let got = randkit::arcsine_cdf(0.5, x).unwrap_or(f64::NAN);
        let oracle = 2.0 / std::f64::consts::PI * x.sqrt().asin();
        worst = worst.max((got - oracle).abs());
        ok &= close(got, oracle, 1e-10);
    }
    let mid = randkit::arcsine_cdf(0.5, 0.5).unwrap_or(f64::NAN);
    ok &= close(mid, 0.5, 1e-10);
    out.push(check("arcsine law at alpha 1/2", ok, format!("F(1/2) = {mid}, max error {worst:e}")));
}

fn determinism_check(out: &mut Vec<Check>) {
    let cfg = ExperimentConfig::from_json(
        r#"{"model": "btm", "seed": 11,
            "experiment": {"kind": "btm_aging", "alpha": 0.5, "beta": null, "t": 1000.0, "ratios": [0.5]},
            "budget": {"replicas": 200}}"#,
    )
    .expect("built-in config is valid");
    let run = || experiments::execute(&cfg).map(|o| o.tables[0].1.to_bytes());
    let ok = matches!((run(), run()), (Ok(a), Ok(b)) if a == b);
    out.push(check("same seed gives the same bytes", ok, "btm aging, 200 replicas".into()));
}

pub fn run_selftest() -> Vec<Check> {
    let mut out = Vec::new();
    extinction_checks(&mut out);
    harris_check(&mut out);
    sigma_checks(&mut out);
    kks_check(&mut out);
    normalizing_check(&mut out);
    arcsine_check(&mut out);
    determinism_check(&mut out);
    out
}
