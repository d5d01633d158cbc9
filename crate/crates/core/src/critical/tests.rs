use proptest::prelude::{prop_assert, prop_assert_eq, proptest};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::*;

fn three_atom() -> CriticalLaw {
    CriticalLaw::from_pmf(vec![0.5, 0.25, 0.0, 0.25]).unwrap()
}

/// Grows a whole bud; `None` if it outgrows `cap`.
fn bud_size(law: &CriticalLaw, cap: usize, stream: Stream) -> Option<usize> {
    let mut bud = SpineIIC::bud(law, stream).with_cap(cap);
    let mut stack = vec![ROOT];
    while let Some(v) = stack.pop() {
        let (first, k) = bud.children(v).ok()?;
        stack.extend(first..first + k);
    }
    Some(bud.len())
}

/// Fixed bud: root with children a, b; a has children c, d; c has child e.
fn small_bud(beta: f64) -> (SpineIIC, f64) {
    let law = CriticalLaw::binary();
    let mut bud = SpineIIC::bud(&law, SeedTree::new(0).stream());
    let add = |bud: &mut SpineIIC, u: NodeId, k: u32| {
        let first = bud.len() as NodeId;
        for _ in 0..k {
            bud.parent.push(u);
            bud.first_child.push(0);
            bud.child_count.push(UNEXPANDED);
            bud.depth.push(bud.depth[u as usize] + 1);
            bud.level.push(0);
            bud.on_spine.push(false);
        }
        bud.first_child[u as usize] = first;
        bud.child_count[u as usize] = k;
    };
    add(&mut bud, 0, 2); // 1, 2
    add(&mut bud, 1, 2); // 3, 4
    add(&mut bud, 2, 0);
    add(&mut bud, 3, 1); // 5
    add(&mut bud, 4, 0);
    add(&mut bud, 5, 0);
    // a trip entering node w costs 2 per descent, and E[descents into w] is beta^{depth}
    let mean = 2.0 * (1.0 + 2.0 * beta + 2.0 * beta * beta + beta.powi(3));
    (bud, mean)
}

/// Trip from the parent of `ROOT` into `ROOT` and back, one step at a time.
fn naive_trip<R: Rng>(bud: &mut SpineIIC, beta: f64, rng: &mut R) -> f64 {
    let mut x = ROOT;
    let mut t = 1.0;
    loop {
        let (first, k) = bud.children(x).unwrap();
        t += 1.0;
        let y = rng.random::<f64>() * (1.0 + beta * k as f64);
        if y < 1.0 {
            if x == ROOT {
                return t;
            }
            x = bud.parent[x as usize];
        } else {
            x = first + (((y - 1.0) / beta) as u32).min(k - 1);
        }
    }
}

#[test]
fn law_validation() {
    assert!(matches!(CriticalLaw::from_pmf(vec![0.0, 1.0]), Err(CriticalError::Degenerate)));
    assert!(matches!(CriticalLaw::from_pmf(vec![0.25, 0.25, 0.5]), Err(CriticalError::NotCritical(_))));
    let b = CriticalLaw::binary();
    assert_eq!(b.variance(), 1.0);
    assert_eq!(b.height_constant(), 2.0);
    assert_eq!(b.size_biased().pmf(), &[0.0, 0.0, 1.0]);
    let t = three_atom();
    assert!((t.variance() - 1.5).abs() < 1e-15);
    assert_eq!(t.size_biased().pmf(), &[0.0, 0.25, 0.0, 0.75]);
}

#[test]
fn binary_spine_always_branches_in_two() {
    let mut iic = gen_spine(&CriticalLaw::binary(), SeedTree::new(1).stream());
    for i in 0..1000 {
        let v = iic.spine_vertex(i).unwrap();
        assert!(iic.is_spine(v));
        assert_eq!(iic.depth(v), i);
        let (first, k) = iic.children(v).unwrap();
        assert_eq!(k, 2);
        assert_eq!((first..first + k).filter(|&c| iic.is_spine(c)).count(), 1);
    }
}

#[test]
fn spine_offspring_chi_square() {
    let law = three_atom();
    let mut iic = gen_spine(&law, SeedTree::new(2).stream());
    let n = 100_000u32;
    let mut counts = [0f64; 4];
    let mut total = 0.0;
    for i in 0..n {
        let v = iic.spine_vertex(i).unwrap();
        let k = iic.children(v).unwrap().1;
        counts[k as usize] += 1.0;
        total += k as f64;
    }
    assert_eq!(counts[0] + counts[2], 0.0);
    let stat: f64 = [(1usize, 0.25), (3, 0.75)]
        .iter()
        .map(|&(k, p)| (counts[k] - n as f64 * p).powi(2) / (n as f64 * p))
        .sum();
    let pval = 1.0 - ChiSquared::new(1.0).unwrap().cdf(stat);
    assert!(pval >= 0.001, "chi2 {stat}, p {pval}");
    // size-biased mean is E[Z^2] = 2.5, variance 0.75
    let mean = total / n as f64;
    let se = (0.75 / n as f64).sqrt();
    assert!((mean - 2.5).abs() < 4.0 * se, "{mean}");
}

#[test]
fn projection_is_idempotent() {
    let law = three_atom();
    let mut iic = gen_spine(&law, SeedTree::new(3).stream());
    let times: Vec<u64> = (1..=2000).map(|i| i * 10).collect();
    walk_positions(&mut iic, 1.0, &times, &mut SeedTree::new(4).stream()).unwrap();
    assert!(iic.len() > 100);
    for u in 0..iic.len() as NodeId {
        let p = iic.project(u);
        assert!(iic.is_spine(p));
        assert_eq!(iic.project(p), p);
        assert_eq!(iic.level(u), iic.depth(p));
        assert!(iic.depth(u) >= iic.level(u));
        if iic.is_spine(u) {
            assert_eq!(p, u);
        } else if let Some(par) = iic.parent(u) {
            assert_eq!(iic.project(par), p);
        }
    }
}

#[test]
fn bud_sizes_follow_catalan_law() {
    // binary critical trees have 2m+1 vertices with probability C_m / 2^{2m+1}
    let cap = 10_000;
    let trees = 100_000;
    let sizes: Vec<Option<usize>> = run_replicas(&SeedTree::new(5), trees, |_, s| bud_size(&CriticalLaw::binary(), cap, s.stream()));
    // C_m / 2^{2m+1}: ratio of consecutive terms is (2m-1)(2m) / (m (m+1) 4)
    let mut exact = vec![0.5f64];
    for m in 1..(cap / 2) {
        let r = ((2 * m - 1) * 2 * m) as f64 / ((m * (m + 1)) as f64 * 4.0);
        exact.push(exact[m - 1] * r);
    }
    for (m, &p) in exact.iter().enumerate().take(5) {
        let hits = sizes.iter().filter(|s| **s == Some(2 * m + 1)).count() as f64;
        let se = (p * (1.0 - p) / trees as f64).sqrt();
        assert!((hits / trees as f64 - p).abs() < 4.0 * se, "m = {m}");
    }
    assert!(sizes.iter().flatten().all(|s| s % 2 == 1));
    let over: f64 = 1.0 - exact.iter().take(cap / 2).sum::<f64>();
    let got = sizes.iter().filter(|s| s.is_none()).count() as f64 / trees as f64;
    let se = (over * (1.0 - over) / trees as f64).sqrt();
    assert!((got - over).abs() < 4.0 * se, "{got} vs {over}");
}

#[test]
fn height_tail_matches_iterated_generating_function() {
    let law = CriticalLaw::binary();
    let grid: Vec<u32> = (0..=40).collect();
    let tail = critical_height_tail(&law, &grid, 1_000_000, &SeedTree::new(6)).unwrap();
    assert_eq!(tail[0].prob.estimate, 1.0);
    assert_eq!(tail[0].ratio, None);
    let mut below = 0.0f64; // P[H < n] = f^{(n)}(0)
    for pt in &tail {
        let exact = 1.0 - below;
        let se = (exact * (1.0 - exact) / 1e6).sqrt();
        assert!((pt.prob.estimate - exact).abs() <= 4.0 * se + 1e-12, "n = {}", pt.n);
        below = law.law().f(below);
    }
}

#[test]
fn negative_binomial_moments() {
    let mut rng = SeedTree::new(7).stream();
    for (r, p) in [(3.0, 0.2), (50.0, 0.4), (1e6, 1.0 / 7.0), (1e13, 0.25)] {
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| neg_binomial(r, p, &mut rng)).collect();
        let mean = r * (1.0 - p) / p;
        let var = r * (1.0 - p) / (p * p);
        let got = estat::mean(&xs);
        assert!((got - mean).abs() < 4.0 * (var / n as f64).sqrt(), "r = {r}: {got} vs {mean}");
        let v = estat::variance(&xs);
        assert!((v / var - 1.0).abs() < 0.06, "r = {r}: {v} vs {var}");
    }
    assert_eq!(neg_binomial(5.0, 1.0, &mut rng), 0.0);
}

proptest! {
    #[test]
    fn split_conserves_count(n in 0u64..1_000_000, j in 1u32..9, seed in 0u64..1000) {
        let mut out = Vec::new();
        uniform_split(n as f64, j, &mut SeedTree::new(seed).stream(), &mut out);
        prop_assert_eq!(out.len(), j as usize);
        prop_assert_eq!(out.iter().sum::<f64>(), n as f64);
        prop_assert!(out.iter().all(|&c| c >= 0.0 && c.fract() == 0.0));
    }

    #[test]
    fn spine_run_profile_is_monotone(seed in 0u64..500) {
        let mut iic = gen_spine(&CriticalLaw::binary(), SeedTree::new(seed).stream());
        let targets: Vec<u32> = (0..=30).collect();
        let run = spine_run(&mut iic, 2.0, &[1e3, 1e6], &targets, 1e200, &mut SeedTree::new(seed + 1).stream()).unwrap();
        let hits: Vec<f64> = run.hits.iter().map_while(|h| *h).collect();
        prop_assert!(hits.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(run.levels_at.len(), 2);
    }
}

#[test]
fn collapsed_trip_matches_stepping() {
    for beta in [1.5, 3.0] {
        let (mut bud, mean) = small_bud(beta);
        let mut rng = SeedTree::new(8).stream();
        let n = 40_000;
        let fast: Vec<f64> = (0..n).map(|_| bud.trip_time(ROOT, 1.0, beta, f64::MAX, &mut rng).unwrap().unwrap()).collect();
        let slow: Vec<f64> = (0..n).map(|_| naive_trip(&mut bud, beta, &mut rng)).collect();
        assert_eq!(bud.len(), 6);
        for xs in [&fast, &slow] {
            let sd = estat::variance(xs).sqrt();
            assert!((estat::mean(xs) - mean).abs() < 4.0 * sd / (n as f64).sqrt(), "{} vs {mean}", estat::mean(xs));
        }
        let ks = estat::ks_two_sample(&fast, &slow);
        // discrete law: the KS bound is conservative
        assert!(ks < 1.95 * (2.0 / n as f64).sqrt(), "ks {ks}");
        assert!(fast.iter().all(|t| t % 2.0 == 0.0));
    }
}

#[test]
fn trip_limit_is_a_lower_bound() {
    let (mut bud, _) = small_bud(2.0);
    let mut rng = SeedTree::new(9).stream();
    for _ in 0..1000 {
        if let Some(t) = bud.trip_time(ROOT, 1.0, 2.0, 20.0, &mut rng).unwrap() {
            assert!(t <= 20.0);
        }
    }
}

#[test]
fn collapsed_walk_matches_naive_level_law() {
    let check = collapsed_vs_naive(&CriticalLaw::binary(), 2.0, 300, 100_000, &SeedTree::new(10)).unwrap();
    assert!(check.tv <= 0.02, "tv {}", check.tv);
    assert_eq!(check.naive.iter().sum::<u64>(), 100_000);
}

#[test]
fn equal_times_age_with_probability_one() {
    let cfg = IicWalkConfig::aging(2.0, 10, 1.0, 1.0, 200);
    let s = biased_walk_iic(&CriticalLaw::binary(), &cfg, &SeedTree::new(11)).unwrap();
    assert_eq!(s.aging[0].prob.estimate, 1.0);
    assert!(matches!(biased_walk_iic(&CriticalLaw::binary(), &IicWalkConfig::aging(1.0, 10, 1.0, 2.0, 5), &SeedTree::new(1)), Err(CriticalError::Bias(_))));
}

#[test]
fn aging_falls_with_b_and_profiles_rise() {
    let cfg = IicWalkConfig {
        beta: 2.0,
        n: 12,
        exponents: vec![1.0, 1.5, 2.0, 3.0],
        profile: vec![0.25, 0.5, 1.0, 1.5, 2.0],
        replicas: 2000,
        time_cap: 1e250,
    };
    let s = biased_walk_iic(&CriticalLaw::binary(), &cfg, &SeedTree::new(12)).unwrap();
    let from_a: Vec<&AgingPoint> = s.aging.iter().filter(|p| p.a == 1.0).collect();
    assert_eq!(from_a.len(), 3);
    for w in from_a.windows(2) {
        let se = (w[0].prob.stderr.powi(2) + w[1].prob.stderr.powi(2)).sqrt();
        assert!(w[1].prob.estimate <= w[0].prob.estimate + 2.0 * se, "{:?}", s.aging);
    }
    assert_eq!(s.monotone, s.profiles.len());
    assert!(s.profile.windows(2).all(|w| w[1].median >= w[0].median));
    assert_eq!(s.capped, 0);
}

#[test]
fn trap_waiting_tail_is_slowly_varying() {
    let xs = trap_excursion_times(&CriticalLaw::binary(), 2.0, 1_000_000, 1e7, &SeedTree::new(13)).unwrap();
    let scaled: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|&t| xs.iter().filter(|&&x| x >= t).count() as f64 / xs.len() as f64 * f64::ln(t))
        .collect();
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    assert!(hi <= 4.0 * lo, "{scaled:?}");
    assert!(xs.iter().all(|&t| t >= 2.0));
}

#[test]
fn simple_walk_starts_at_root() {
    let law = CriticalLaw::binary();
    let mut iic = gen_spine(&law, SeedTree::new(14).stream());
    let xs = walk_positions(&mut iic, 1.0, &[0, 1, 10, 100], &mut SeedTree::new(15).stream()).unwrap();
    assert_eq!(iic.depth(xs[0]), 0);
    assert_eq!(iic.depth(xs[1]), 1);
    let d = simple_walk_iic(&law, &[1000, 10_000, 100_000], 60, &SeedTree::new(16)).unwrap();
    assert!(d.medians.iter().all(|&m| m > 0.0));
    assert!(d.report.estimate > 0.2 && d.report.estimate < 0.5, "{:?}", d.report);
}
