use proptest::prelude::{prop_assert, proptest};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::*;
use crate::estat;
use crate::randkit::SeedTree;

fn fig2() -> OffspringLaw {
    OffspringLaw::new(vec![0.1, 0.0, 0.9]).unwrap()
}

fn fig3() -> OffspringLaw {
    OffspringLaw::new(vec![0.25, 1.0 / 3.0, 5.0 / 12.0]).unwrap()
}

fn ones_and_threes() -> OffspringLaw {
    OffspringLaw::new(vec![0.0, 0.5, 0.0, 0.5]).unwrap()
}

/// Smaller root of `a x^2 + b x + c`.
fn small_root(a: f64, b: f64, c: f64) -> f64 {
    (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// Smallest zero of `f(s) - s` on `[0, 1)`, located on a grid and bisected.
fn fixed_point_oracle(law: &OffspringLaw) -> f64 {
    let phi = |s: f64| law.f(s) - s;
    let mut lo = 0.0;
    let mut hi = 1.0;
    for i in 1..100_000 {
        let s = i as f64 / 100_000.0;
        if phi(s) < 0.0 {
            hi = s;
            break;
        }
        lo = s;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn pmf_strategy() -> impl proptest::strategy::Strategy<Value = OffspringLaw> {
    proptest::collection::vec(0.01f64..1.0, 3..7).prop_filter_map("supercritical with leaves", |w| {
        let total: f64 = w.iter().sum();
        let law = OffspringLaw::normalized(w.iter().map(|x| x / total).collect());
        (law.is_supercritical() && law.mean() > 1.05).then_some(law)
    })
}

use proptest::strategy::Strategy;

#[test]
fn pmf_validation() {
    assert!(matches!(OffspringLaw::new(vec![0.5, 0.4]), Err(GwError::NotNormalized(_))));
    assert!(matches!(OffspringLaw::new(vec![-0.1, 1.1]), Err(GwError::BadMass { index: 0, .. })));
    assert!(matches!(OffspringLaw::new(vec![]), Err(GwError::EmptyPmf)));
    let law = OffspringLaw::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    assert_eq!(law.max_degree(), 2);
    assert!(!law.has_leaves() && law.is_supercritical());
    assert!(fig2().has_leaves());
}

#[test]
fn extinction_examples() {
    assert_eq!(extinction_prob(&OffspringLaw::fixed(2)).q, 0.0);
    assert_eq!(extinction_prob(&ones_and_threes()).q, 0.0);
    // 9q^2 - 10q + 1 = 0 and 5q^2 - 8q + 3 = 0
    let q2 = small_root(9.0, -10.0, 1.0);
    let q3 = small_root(5.0, -8.0, 3.0);
    assert!((q2 - 1.0 / 9.0).abs() < 1e-15 && (q3 - 0.6).abs() < 1e-15);
    assert!((extinction_prob(&fig2()).q - q2).abs() < 1e-12);
    assert!((extinction_prob(&fig3()).q - q3).abs() < 1e-12);
    let sub = OffspringLaw::new(vec![0.5, 0.5]).unwrap();
    assert_eq!(extinction_prob(&sub), Extinction { q: 1.0, supercritical: false });
}

#[test]
fn critical_bias_examples() {
    assert!((fig2().f_prime(1.0 / 9.0) - 0.2).abs() < 1e-15);
    assert!((critical_bias(&fig2()).unwrap() - 5.0).abs() < 1e-10);
    assert!((fig3().f_prime(0.6) - 5.0 / 6.0).abs() < 1e-15);
    assert!((critical_bias(&fig3()).unwrap() - 1.2).abs() < 1e-10);
    assert_eq!(critical_bias(&OffspringLaw::fixed(2)), None);
}

#[test]
fn harris_split_fig2() {
    let split = harris_split(&fig2()).unwrap();
    let h = split.h.clone().unwrap();
    for (k, want) in [(0, 0.0), (1, 0.2), (2, 0.8)] {
        assert!((split.g.prob(k) - want).abs() < 1e-12, "g_{k}");
    }
    for (k, want) in [(0, 0.9), (1, 0.0), (2, 0.1)] {
        assert!((h.prob(k) - want).abs() < 1e-12, "h_{k}");
    }
    assert!((split.g.mean() - 1.8).abs() < 1e-12);
    assert!((h.mean() - 0.2).abs() < 1e-12);
    let leafless = harris_split(&OffspringLaw::fixed(3)).unwrap();
    assert!(leafless.h.is_none() && leafless.g == OffspringLaw::fixed(3));
}

#[test]
fn sigma2_examples() {
    assert!((leafless_sigma2(&OffspringLaw::fixed(2)).unwrap() - 2.0).abs() < 1e-12);
    for m in 2..8 {
        assert!((leafless_sigma2(&OffspringLaw::fixed(m)).unwrap() - m as f64).abs() < 1e-12);
    }
    assert!((leafless_sigma2(&ones_and_threes()).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert!(matches!(leafless_sigma2(&fig2()), Err(GwError::HasLeaves)));
}

#[test]
fn alpha_tree_examples() {
    assert!((alpha_tree(&fig2(), 5.0).unwrap() - 1.0).abs() < 1e-10);
    assert!((alpha_tree(&fig2(), 25.0).unwrap() - 0.5).abs() < 1e-10);
    assert!((alpha_tree(&fig3(), 1.44).unwrap() - 0.5).abs() < 1e-10);
    assert!(matches!(alpha_tree(&fig2(), 1.0), Err(GwError::Bias(_))));
    assert!(matches!(alpha_tree(&fig2(), 0.5), Err(GwError::Bias(_))));
}

#[test]
fn random_bias_alpha_examples() {
    let point = random_bias_alpha(&fig2(), &AtomLaw::point(7.0).unwrap()).unwrap();
    assert!((point.alpha - alpha_tree(&fig2(), 7.0).unwrap()).abs() < 1e-10);
    assert!(point.lattice_span.is_some());
    let nu = AtomLaw::uniform(&[2.0, 8.0]).unwrap();
    let ra = random_bias_alpha(&fig2(), &nu).unwrap();
    assert!((nu.moment(ra.alpha) - 5.0).abs() < 1e-10);
    assert!((ra.alpha - 1.0).abs() < 1e-10);
    // first point of a 10^6 grid on [0, 2] where the moment reaches 5
    let grid = (0..=1_000_000).map(|i| 2.0 * i as f64 / 1e6).find(|&t| nu.moment(t) >= 5.0).unwrap();
    assert!((ra.alpha - grid).abs() < 2e-6 + 1e-6);
    assert_eq!(ra.lattice_span.map(|s| (s - 2f64.ln()).abs() < 1e-12), Some(true));
    let non_lattice = random_bias_alpha(&fig2(), &AtomLaw::uniform(&[10.0, 30.0]).unwrap()).unwrap();
    assert!(non_lattice.lattice_span.is_none() && non_lattice.alpha < 1.0);
    assert!(BiasSpec::random(AtomLaw::uniform(&[0.5, 3.0]).unwrap()).is_err());
}

#[test]
fn pipe_alpha_examples() {
    let cosh_law = AtomLaw::uniform(&[2.0, 0.5]).unwrap();
    let none = pipe_alpha(&OffspringLaw::fixed(2), &cosh_law);
    assert!(none.alpha1.is_infinite() && none.alpha2.is_infinite() && none.alpha.is_infinite());
    let half_unary = OffspringLaw::new(vec![0.0, 0.5, 0.5]).unwrap();
    let pm = pipe_alpha(&half_unary, &AtomLaw::point(3.0).unwrap());
    assert!(pm.alpha2.is_infinite() && pm.alpha.is_infinite());
    assert!((pm.alpha1 - 2f64.ln() / 3f64.ln()).abs() < 1e-10);
    // cosh(t ln 2) = 2  <=>  |t| = arccosh(2) / ln 2
    let edge = 2f64.acosh() / 2f64.ln();
    assert!((edge - 1.8999686269529916).abs() < 1e-12);
    let pa = pipe_alpha(&half_unary, &cosh_law);
    assert!((pa.alpha1 - edge).abs() < 1e-10 && (pa.alpha2 - edge).abs() < 1e-10);
    assert!((pa.alpha - 2.0 * edge).abs() < 1e-10);
}

#[test]
fn analytics_bundle() {
    let a = GwAnalytics::new(&fig2());
    assert!((a.q - 1.0 / 9.0).abs() < 1e-12 && (a.beta_c.unwrap() - 5.0).abs() < 1e-10);
    assert!(a.sigma2.is_none() && a.split.is_some());
    let b = GwAnalytics::new(&OffspringLaw::fixed(2));
    assert_eq!(b.sigma2, Some(2.0));
    assert_eq!(b.beta_c, None);
}

proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(64))]

    #[test]
    fn extinction_matches_bisection(law in pmf_strategy()) {
        let q = extinction_prob(&law).q;
        prop_assert!((law.f(q) - q).abs() < 1e-12);
        prop_assert!((q - fixed_point_oracle(&law)).abs() < 1e-9);
        prop_assert!(q < 1.0);
        prop_assert!(critical_bias(&law).unwrap() > 1.0);
    }

    #[test]
    fn generating_function_identities(law in pmf_strategy()) {
        let split = harris_split(&law).unwrap();
        let h = split.h.clone().unwrap();
        let q = split.q;
        prop_assert!(split.g.prob(0) == 0.0);
        prop_assert!((split.g.mean() - law.mean()).abs() < 1e-12);
        prop_assert!((h.mean() - law.f_prime(q)).abs() < 1e-12);
        prop_assert!(h.mean() < 1.0);
        // polynomial identities at a few points
        for s in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let g_direct = (law.f((1.0 - q) * s + q) - q) / (1.0 - q);
            prop_assert!((split.g.f(s) - g_direct).abs() < 1e-10);
            prop_assert!((h.f(s) - law.f(q * s) / q).abs() < 1e-10);
        }
    }

    #[test]
    fn alpha_tree_decreasing(law in pmf_strategy(), b in 1.01f64..50.0, db in 0.01f64..10.0) {
        prop_assert!(alpha_tree(&law, b).unwrap() > alpha_tree(&law, b + db).unwrap());
    }
}

#[test]
fn pipe_tree_shape() {
    let mut tree = gen_tree(&OffspringLaw::fixed(1), TreeMode::PipeExample, SeedTree::new(1).stream()).unwrap();
    for u in 0..2000u32 {
        let kids: Vec<NodeId> = tree.children(u).unwrap().collect();
        let kinds: Vec<NodeKind> = kids.iter().map(|&c| tree.kind(c)).collect();
        match tree.kind(u) {
            NodeKind::Backbone => {
                assert_eq!(kinds.iter().filter(|&&k| k == NodeKind::Backbone).count(), 2);
                assert_eq!(kinds.iter().filter(|&&k| k == NodeKind::Pipe).count(), 1);
            }
            NodeKind::Pipe => assert_eq!(kinds, vec![NodeKind::Pipe]),
            other => panic!("unexpected {other:?}"),
        }
        for c in kids {
            assert_eq!(tree.parent(c), Some(u));
            assert_eq!(tree.depth(c), tree.depth(u) + 1);
        }
    }
}

#[test]
fn harris_without_leaves_is_plain() {
    let law = ones_and_threes();
    let mut a = gen_tree(&law, TreeMode::Plain, SeedTree::new(4).stream()).unwrap();
    let mut b = gen_tree(&law, TreeMode::Harris, SeedTree::new(4).stream()).unwrap();
    for u in 0..5000u32 {
        assert_eq!(a.children(u).unwrap(), b.children(u).unwrap());
        assert_eq!(b.kind(u), NodeKind::Backbone);
    }
}

#[test]
fn harris_tree_structure() {
    let mut tree = gen_tree(&fig3(), TreeMode::Harris, SeedTree::new(5).stream()).unwrap();
    // follow backbone children down 200 levels; expand some traps on the way
    let mut u = ROOT;
    for _ in 0..200 {
        let kids: Vec<NodeId> = tree.children(u).unwrap().collect();
        for &c in &kids {
            assert_eq!(tree.parent(c), Some(u));
        }
        let next = kids.iter().copied().find(|&c| tree.is_backbone(c));
        u = next.expect("backbone vertex without backbone child");
    }
    assert_eq!(tree.depth(u), 200);
    let traps = (0..tree.len() as u32).filter(|&v| tree.kind(v) == NodeKind::Trap).count();
    assert!(traps > 0);
    for v in 0..tree.len() as u32 {
        if tree.kind(v) == NodeKind::Trap {
            let kids: Vec<NodeId> = tree.children(v).unwrap().collect();
            assert!(kids.iter().all(|&c| tree.kind(c) == NodeKind::Trap));
        }
    }
}

#[test]
fn harris_reconstruction_chi_square() {
    for law in [fig3(), OffspringLaw::new(vec![0.2, 0.1, 0.3, 0.1, 0.3]).unwrap()] {
        let split = harris_split(&law).unwrap();
        let buds = BudSampler::new(&law, split.q);
        let mut rng = SeedTree::new(6).stream();
        let n = 1_000_000;
        let mut counts = vec![0u64; law.max_degree() + 1];
        for _ in 0..n {
            let d = split.g.sample(&mut rng);
            counts[d + buds.sample(d, &mut rng)] += 1;
        }
        let q = split.q;
        let mut chi2 = 0.0;
        let mut cells = 0;
        for (k, &c) in counts.iter().enumerate() {
            let p = law.prob(k) * (1.0 - q.powi(k as i32)) / (1.0 - q);
            if p == 0.0 {
                assert_eq!(c, 0);
                continue;
            }
            let e = p * n as f64;
            chi2 += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
        let pval = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
        assert!(pval >= 0.001, "chi2 {chi2} p {pval}");
    }
}

#[test]
fn subcritical_trap_grows_to_extinction() {
    let mut tree = gen_tree(&fig2(), TreeMode::SubcriticalTrap, SeedTree::new(7).stream()).unwrap();
    let h = tree.grow_to_extinction().unwrap();
    assert!((0..tree.len() as u32).all(|u| tree.is_expanded(u)));
    assert!((0..tree.len() as u32).all(|u| tree.depth(u) <= h));
    let mut big = gen_tree(&OffspringLaw::fixed(2), TreeMode::Plain, SeedTree::new(7).stream()).unwrap().with_cap(100);
    assert!(matches!(big.grow_to_extinction(), Err(GwError::NodeCap(100))));
}

/// `P[H >= n] = 1 - h_n(0)` with `h_n` the n-fold composition.
fn exact_height_tail(h: &OffspringLaw, n: u32) -> f64 {
    let mut s = 0.0;
    for _ in 0..n {
        s = h.f(s);
    }
    1.0 - s
}

#[test]
fn trap_height_direct_matches_composition() {
    let h = harris_split(&fig2()).unwrap().h.unwrap();
    let trees = 1_000_000;
    let counts = trap_height_direct(&h, trees, 5, &SeedTree::new(8)).unwrap();
    assert_eq!(counts[0], trees as u64);
    for n in 1..=4u32 {
        let p = exact_height_tail(&h, n);
        let se = (p * (1.0 - p) / trees as f64).sqrt();
        let got = counts[n as usize] as f64 / trees as f64;
        assert!((got - p).abs() < 4.0 * se, "n={n} got {got} want {p}");
    }
}

#[test]
fn trap_height_tail_ratio_fifth() {
    let h = harris_split(&fig2()).unwrap().h.unwrap();
    let tail = trap_height_tail(&h, 8, 1_000_000, &SeedTree::new(9)).unwrap();
    for pt in &tail[3..=8] {
        let exact = exact_height_tail(&h, pt.n + 1) / exact_height_tail(&h, pt.n);
        assert!((pt.ratio - 0.2).abs() <= 0.02, "n={} ratio {}", pt.n, pt.ratio);
        assert!((pt.ratio - exact).abs() < 5.0 * pt.ratio_se + 1e-4);
        assert!((pt.prob / exact_height_tail(&h, pt.n) - 1.0).abs() < 0.02);
    }
}

#[test]
fn transition_weights_sum_to_one_and_reverse() {
    let beta = 3.0;
    let bias = BiasSpec::fixed(beta).unwrap();
    let mut tree = gen_tree(&fig2(), TreeMode::Harris, SeedTree::new(10).stream()).unwrap();
    let budget = TreeWalkBudget { max_steps: 20_000, max_level: None, record_every: 0 };
    simulate_tree_walk(&mut tree, &bias, budget, &mut SeedTree::new(11).stream()).unwrap();
    // conductance c(parent, x) = beta^{|x|-1}; pi(x) = sum of incident
    // conductances, compared in logs since depths reach the hundreds
    let visited: Vec<NodeId> = (0..tree.len() as u32).filter(|&u| tree.is_expanded(u)).collect();
    let ln_pi = |tree: &mut TreeArena, x: NodeId| -> f64 {
        let d = tree.depth(x) as f64;
        let k = tree.children(x).unwrap().len() as f64;
        if x == ROOT {
            k.ln()
        } else {
            (d - 1.0) * beta.ln() + (1.0 + k * beta).ln()
        }
    };
    for &x in &visited {
        let w = transition_weights(&mut tree, x, &bias).unwrap();
        assert!((w.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12);
        let lx = ln_pi(&mut tree, x);
        for (y, pxy) in w {
            let y = y.unwrap();
            if y == x {
                continue;
            }
            let back = transition_weights(&mut tree, y, &bias).unwrap();
            let pyx = back.iter().find(|b| b.0 == Some(x)).unwrap().1;
            let ly = ln_pi(&mut tree, y);
            assert!((lx + pxy.ln() - ly - pyx.ln()).abs() < 1e-9, "x={x} y={y}");
        }
    }
}

#[test]
fn walk_steps_follow_transition_weights() {
    // depth-1 vertex of a ternary tree: parent 1/(1+3b), each child b/(1+3b)
    let beta = 2.0;
    let bias = BiasSpec::fixed(beta).unwrap();
    let mut tree = gen_tree(&OffspringLaw::fixed(3), TreeMode::Plain, SeedTree::new(12).stream()).unwrap();
    let mut rng = SeedTree::new(13).stream();
    let budget = TreeWalkBudget { max_steps: 1, max_level: None, record_every: 1 };
    let mut up = 0;
    let trials = 200_000;
    for _ in 0..trials {
        let rec = simulate_tree_walk(&mut tree, &bias, TreeWalkBudget { max_steps: 2, ..budget }, &mut rng).unwrap();
        assert_eq!(rec.depths[1], 1);
        if rec.final_depth == 0 {
            up += 1;
        }
    }
    let p = up as f64 / trials as f64;
    assert!((p - 1.0 / 7.0).abs() < 4.0 * (1.0 / 7.0 * 6.0 / 7.0 / trials as f64).sqrt());
}

#[test]
fn walk_record_is_nearest_neighbour() {
    let bias = BiasSpec::fixed(1.5).unwrap();
    for seed in 0..5 {
        let mut tree = gen_tree(&fig3(), TreeMode::Harris, SeedTree::new(seed).stream()).unwrap();
        let budget = TreeWalkBudget { max_steps: 50_000, max_level: None, record_every: 1 };
        let rec = simulate_tree_walk(&mut tree, &bias, budget, &mut SeedTree::new(100 + seed).stream()).unwrap();
        assert_eq!(rec.depths[0], 0);
        assert!(rec.depths.windows(2).all(|w| (w[1] - w[0]).abs() <= 1));
        assert!(rec.hitting_times.windows(2).all(|w| w[1] > w[0]));
        for (n, &t) in rec.hitting_times.iter().enumerate() {
            assert_eq!(rec.depths[t as usize], n as i32 + 1);
            assert!(rec.depths[..t as usize].iter().all(|&d| d <= n as i32));
        }
    }
}

#[test]
fn d_ary_speed() {
    for (d, beta) in [(2usize, 1.0), (3, 2.0)] {
        let spec = TreeSpec::new(OffspringLaw::fixed(d), TreeMode::Plain);
        let est = speed_estimate(&spec, &BiasSpec::fixed(beta).unwrap(), 10_000_000, 1, &SeedTree::new(14)).unwrap();
        let want = (d as f64 * beta - 1.0) / (d as f64 * beta + 1.0);
        assert!((est.report.estimate / want - 1.0).abs() < 0.02, "d={d} b={beta} {}", est.report.estimate);
    }
}

#[test]
fn random_point_bias_matches_fixed_speed() {
    let spec = TreeSpec::new(OffspringLaw::fixed(2), TreeMode::Plain).with_edge_law(AtomLaw::point(2.0).unwrap());
    let bias = BiasSpec::random(AtomLaw::point(2.0).unwrap()).unwrap();
    let est = speed_estimate(&spec, &bias, 2_000_000, 4, &SeedTree::new(15)).unwrap();
    assert!((est.report.estimate - 0.6).abs() < 0.01, "{}", est.report.estimate);
    let plain = TreeSpec::new(OffspringLaw::fixed(2), TreeMode::Plain);
    let mut tree = plain.build(&SeedTree::new(1)).unwrap();
    let budget = TreeWalkBudget { max_steps: 10, max_level: None, record_every: 0 };
    assert!(simulate_tree_walk(&mut tree, &bias, budget, &mut SeedTree::new(2).stream()).is_err());
}

#[test]
fn random_bias_root_uses_artificial_parent() {
    let spec = TreeSpec::new(OffspringLaw::fixed(1), TreeMode::Plain).with_edge_law(AtomLaw::point(1.5).unwrap());
    let mut tree = spec.build(&SeedTree::new(3)).unwrap();
    let bias = BiasSpec::random(AtomLaw::point(1.5).unwrap()).unwrap();
    let w = transition_weights(&mut tree, ROOT, &bias).unwrap();
    assert_eq!(w[0].0, None);
    assert!((w[0].1 - 0.4).abs() < 1e-12);
    let budget = TreeWalkBudget { max_steps: 100_000, max_level: None, record_every: 1 };
    let rec = simulate_tree_walk(&mut tree, &bias, budget, &mut SeedTree::new(4).stream()).unwrap();
    assert!(rec.depths.contains(&-1));
    for w in rec.depths.windows(2) {
        if w[0] == -1 {
            assert_eq!(w[1], 0);
        }
    }
}

#[test]
fn monotone_speed_binary_tree() {
    let spec = TreeSpec::new(OffspringLaw::fixed(2), TreeMode::Plain);
    let reports: Vec<EstimateReport> = [4.0, 8.0, 16.0]
        .iter()
        .map(|&b| speed_estimate(&spec, &BiasSpec::fixed(b).unwrap(), 200_000, 20, &SeedTree::new(16)).unwrap().report)
        .collect();
    for w in reports.windows(2) {
        assert!(w[0].ci_hi < w[1].ci_lo, "{:?}", reports);
    }
}

use crate::estat::EstimateReport;

#[test]
fn strong_recurrence_below_inverse_mean() {
    let spec = TreeSpec::new(fig2(), TreeMode::Harris);
    let bias = BiasSpec::fixed(0.5).unwrap();
    let visits = crate::replicas::run_replicas(&SeedTree::new(17), 100, |_, s| {
        let mut tree = spec.build(&s.child(0)).unwrap();
        let budget = TreeWalkBudget { max_steps: 1_000_000, max_level: None, record_every: 0 };
        simulate_tree_walk(&mut tree, &bias, budget, &mut s.child(1).stream()).unwrap().root_visits
    });
    let ok = visits.iter().filter(|&&v| v >= 100).count();
    assert!(ok >= 95, "{ok}");
}

#[test]
fn sub_ballistic_hitting_exponent() {
    let spec = TreeSpec::new(fig2(), TreeMode::Harris);
    let levels = [10, 14, 20, 28, 40, 56, 80, 113, 160, 200];
    let est = hitting_exponent_tree(&spec, &BiasSpec::fixed(6.0).unwrap(), &levels, 200, TREE_STEP_CAP, &SeedTree::new(18)).unwrap();
    let target = 6f64.ln() / 5f64.ln();
    assert!((est.target.unwrap() - target).abs() < 1e-12);
    assert!((est.report.estimate - target).abs() < 0.1, "{:?}", est.report);
    assert_eq!(est.incomplete, 0);
}

#[test]
fn lattice_diagnostic_shapes() {
    let spec = TreeSpec::new(fig2(), TreeMode::Harris);
    let diag = lattice_diagnostic(&spec, 6.0, &[1, 2, 3, 4], &[1.0, 2.2], 400, TREE_STEP_CAP, &SeedTree::new(19)).unwrap();
    assert_eq!(diag.levels[0], vec![5, 25, 125, 625]);
    assert_eq!(diag.levels[1], vec![11, 55, 275, 1375]);
    assert_eq!(diag.cross_k_ks.len(), 2);
    assert_eq!(diag.cross_k_ks[0].len(), 3);
    assert_eq!(diag.cross_lambda_ks.len(), 4);
    let first = diag.cross_k_ks[0][0];
    let last = diag.cross_k_ks[0][2];
    assert!(first > last, "{:?}", diag.cross_k_ks);
    let s = &diag.samples[0][0];
    assert_eq!(estat::ks_two_sample(s, s), 0.0);
    assert!(lattice_diagnostic(&spec, 4.0, &[1], &[1.0], 10, 1000, &SeedTree::new(1)).is_err());
}

#[test]
fn aidekon_collapses_for_regular_tree() {
    for (d, beta) in [(2usize, 1.5), (3, 0.8)] {
        let law = OffspringLaw::fixed(d);
        let cfg = AidekonConfig { samples: 200, inner_trials: 200, depth: 20, resamples: 500 };
        let est = aidekon_speed(&law, beta, cfg, &SeedTree::new(20)).unwrap();
        let want = (d as f64 * beta - 1.0) / (d as f64 * beta + 1.0);
        assert!(est.report.contains(want) || (est.report.estimate - want).abs() < 1e-9, "{:?}", est.report);
        assert!(!est.undersampled);
    }
    let cfg = AidekonConfig { samples: 10, inner_trials: 50, depth: 10, resamples: 100 };
    assert!(aidekon_speed(&OffspringLaw::fixed(2), 1.0, cfg, &SeedTree::new(1)).unwrap().undersampled);
}

#[test]
fn aidekon_beta_one_mean_formula() {
    let law = ones_and_threes();
    // E[(Z-1)/(Z+1)] = 0.5 * 0 + 0.5 * 1/2
    let exact: f64 = law.pmf().iter().enumerate().map(|(k, p)| p * (k as f64 - 1.0) / (k as f64 + 1.0)).sum();
    assert_eq!(exact, 0.25);
    let cfg = AidekonConfig { samples: 400, inner_trials: 200, depth: 40, resamples: 1000 };
    let est = aidekon_speed(&law, 1.0, cfg, &SeedTree::new(21)).unwrap();
    assert!(est.report.contains(exact), "{:?}", est.report);
    assert_eq!(est.dropped_draws, 0);
}

#[test]
fn escape_probability_unary_line() {
    // on a ray the walk escapes from depth 1 with probability 1 - 1/beta
    let mut tree = gen_tree(&OffspringLaw::fixed(1), TreeMode::Plain, SeedTree::new(22).stream()).unwrap();
    let trials = 20_000;
    let (e, stalled) = escape_probability(&mut tree, 2.0, 60, trials, &mut SeedTree::new(23).stream()).unwrap();
    assert_eq!(stalled, 0);
    assert!((e - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt(), "{e}");
}
