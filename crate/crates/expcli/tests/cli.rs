use std::path::Path;
use std::process::Command;

use expcli::figure::figure_table;
use expcli::manifest::{MANIFEST_FILE, SUMMARY_FILE};
use expcli::table::Table;
use expcli::{rerun, run_experiment, CliError, ExperimentConfig, RunManifest, RunStatus};
use proptest::prelude::{prop_assert_eq, proptest};

fn cfg(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).expect("test config is valid")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expcli"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

const AGING: &str = r#"{"model": "btm", "seed": 5,
    "experiment": {"kind": "btm_aging", "alpha": 0.5, "beta": null, "t": 100000.0,
                   "ratios": [0.1, 0.25, 0.5, 0.75, 0.9]},
    "budget": {"replicas": 4000}}"#;

const SMALL_CONFIGS: [&str; 5] = [
    AGING,
    r#"{"model": "gwtree", "seed": 3,
        "experiment": {"kind": "gw_speed_curve", "pmfs": [[0.1, 0, 0.9], [0.25, 0.3333333333333333, 0.4166666666666667]],
                       "betas": [0.8, 2.0, 6.0]},
        "budget": {"steps": 20000, "replicas": 16}}"#,
    r#"{"model": "iic", "seed": 9,
        "experiment": {"kind": "iic_aging", "pmf": [0.5, 0, 0.5], "beta": 2.0, "n": 8,
                       "exponents": [1.0, 2.0], "profile": [1.0, 1.5, 2.0]},
        "budget": {"replicas": 64}}"#,
    r#"{"model": "perc", "seed": 4,
        "experiment": {"kind": "perc_speed", "d": 2, "p": 0.7, "direction": [1.0, 0.0],
                       "lambdas": [0.0, 0.5], "levels": [8, 16, 32]},
        "budget": {"steps": 2000, "replicas": 12}}"#,
    r#"{"model": "rwre1d", "seed": 1,
        "experiment": {"kind": "rwre_hitting", "atoms": [[0.8, 0.5], [0.3333333333333333, 0.5]], "levels": [16, 32, 64]},
        "budget": {"replicas": 24}}"#,
];

fn result_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let m = RunManifest::load(dir).unwrap();
    m.files.iter().map(|f| (f.name.clone(), read(dir, &f.name))).collect()
}

#[test]
fn one_and_eight_workers_write_identical_files() {
    for json in SMALL_CONFIGS {
        let c = cfg(json);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = run_experiment(&c, a.path(), 1).unwrap();
        let mb = run_experiment(&c, b.path(), 8).unwrap();
        assert_eq!(ma.files, mb.files, "{}", c.experiment.kind());
        assert_eq!(result_files(a.path()), result_files(b.path()));
        assert_eq!(ma.config_hash, mb.config_hash);
    }
}

#[test]
fn rerun_reproduces_every_file() {
    for json in SMALL_CONFIGS {
        let c = cfg(json);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = run_experiment(&c, a.path(), 2).unwrap();
        let m = RunManifest::load(&a.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(m.files, first.files);
        let again = rerun(&m, b.path(), 3).unwrap();
        assert_eq!(again.files, first.files);
        assert_eq!(result_files(a.path()), result_files(b.path()));
    }
}

#[test]
fn rerun_reports_tampered_digests() {
    let c = cfg(SMALL_CONFIGS[4]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut m = run_experiment(&c, a.path(), 1).unwrap();
    m.files[1].sha256 = "0".repeat(64);
    match rerun(&m, b.path(), 1) {
        Err(e @ CliError::Mismatch(_)) => {
            assert_eq!(e.exit_code(), 1);
            assert!(matches!(e, CliError::Mismatch(ref v) if v == &vec!["results.csv".to_string()]));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn binary_run_and_rerun_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("aging.json");
    std::fs::write(&config, AGING).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let st = bin().args(["run", config.to_str().unwrap(), "--output", a.to_str().unwrap(), "--workers", "1"]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let st = bin()
        .args(["rerun", a.join(MANIFEST_FILE).to_str().unwrap(), "--output", b.to_str().unwrap(), "--workers", "8"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["config.json", "results.csv", SUMMARY_FILE] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let csv = String::from_utf8(read(&a, "results.csv")).unwrap();
    assert!(!csv.contains('\r'));
    assert!(csv.starts_with("ratio,empirical,ci_lo,ci_hi,arcsine\n"));
}

#[test]
fn worker_env_var_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, SMALL_CONFIGS[1]).unwrap();
    for (w, out) in [("1", "x"), ("4", "y")] {
        let st = bin()
            .env("RWRELAB_WORKERS", w)
            .args(["run", config.to_str().unwrap(), "-o", dir.path().join(out).to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    }
    assert_eq!(read(&dir.path().join("x"), "results.csv"), read(&dir.path().join("y"), "results.csv"));
    let m: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("y"), MANIFEST_FILE)).unwrap();
    assert_eq!(m["workers"], 4);
}

#[test]
fn invalid_configs_exit_with_two() {
    let bad = [
        // unknown field
        r#"{"model": "btm", "seed": 1, "colour": 1,
            "experiment": {"kind": "btm_clock", "alpha": 0.5, "n": 10}, "budget": {"replicas": 10}}"#,
        // model does not match kind
        r#"{"model": "perc", "seed": 1,
            "experiment": {"kind": "btm_clock", "alpha": 0.5, "n": 10}, "budget": {"replicas": 10}}"#,
        // pmf off by 1e-9
        r#"{"model": "iic", "seed": 1,
            "experiment": {"kind": "iic_height", "pmf": [0.5, 0, 0.500000001], "n_grid": [4]}, "budget": {"replicas": 10}}"#,
        // no steps for a speed run
        r#"{"model": "gwtree", "seed": 1,
            "experiment": {"kind": "gw_speed_curve", "pmfs": [[0.1, 0, 0.9]], "betas": [2.0]}, "budget": {"replicas": 10}}"#,
        // model-level rejection: tail index outside (0, 2]
        r#"{"model": "btm", "seed": 1,
            "experiment": {"kind": "btm_clock", "alpha": -1.0, "n": 10}, "budget": {"replicas": 10}}"#,
        "not json",
    ];
    let dir = tempfile::tempdir().unwrap();
    for (i, json) in bad.iter().enumerate() {
        let path = dir.path().join(format!("{i}.json"));
        std::fs::write(&path, json).unwrap();
        let out = bin().args(["run", path.to_str().unwrap(), "-o", dir.path().join(format!("o{i}")).to_str().unwrap()]).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "config {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = bin().args(["run", dir.path().join("missing.json").to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn capped_walks_give_partial_results_and_exit_three() {
    // depth 40 needs at least 40 steps
    let json = r#"{"model": "gwtree", "seed": 2,
        "experiment": {"kind": "gw_hitting", "pmf": [0.1, 0, 0.9], "beta": 6.0, "levels": [10, 20, 40]},
        "budget": {"replicas": 8, "step_cap": 39}}"#;
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&cfg(json), dir.path(), 1).unwrap();
    assert_eq!(m.status, RunStatus::Partial);
    let t = Table::read(&dir.path().join("results.csv")).unwrap();
    assert_eq!(t.rows[0][t.column("incomplete").unwrap()], "8");

    let config = dir.path().join("c.json");
    std::fs::write(&config, json).unwrap();
    let st = bin().args(["run", config.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()]).status().unwrap();
    assert_eq!(st.code(), Some(3));
    assert!(dir.path().join("o/results.csv").exists());
}

#[test]
fn figure_layouts() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(SMALL_CONFIGS[1]), dir.path(), 1).unwrap();
    let st = bin().args(["figure", dir.path().to_str().unwrap()]).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let fig = Table::read(&dir.path().join("figure.csv")).unwrap();
    assert_eq!(fig.header, ["x", "y", "series", "ci_lo", "ci_hi"]);
    let mut series: Vec<&str> = fig.rows.iter().map(|r| r[2].as_str()).collect();
    series.dedup();
    assert_eq!(series.len(), 2, "one series per pmf");
    assert_eq!(fig.rows.len(), 6);

    let aging = tempfile::tempdir().unwrap();
    run_experiment(&cfg(AGING), aging.path(), 1).unwrap();
    expcli::figure::figure(aging.path()).unwrap();
    let fig = Table::read(&aging.path().join("figure.csv")).unwrap();
    let mut series: Vec<&str> = fig.rows.iter().map(|r| r[2].as_str()).collect();
    series.dedup();
    assert_eq!(series, ["empirical", "arcsine"]);
}

#[test]
fn lattice_figure_has_one_series_per_lambda() {
    let json = r#"{"model": "gwtree", "seed": 8,
        "experiment": {"kind": "gw_lattice", "pmf": [0.1, 0, 0.9], "beta": 6.0, "k_grid": [1, 2], "lambdas": [1.0, 1.5, 2.5]},
        "budget": {"replicas": 10}}"#;
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(json), dir.path(), 1).unwrap();
    let results = Table::read(&dir.path().join("results.csv")).unwrap();
    // n_lambda(k) = floor(lambda 5^k)
    let n: Vec<&str> = results.rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(n, ["5", "25", "7", "37", "12", "62"]);
    let fig = figure_table("gw_lattice", &results, "results.csv").unwrap();
    let mut series: Vec<&str> = fig.rows.iter().map(|r| r[2].as_str()).collect();
    series.dedup();
    assert_eq!(series, ["lambda=1", "lambda=1.5", "lambda=2.5"]);
}

#[test]
fn figure_with_missing_columns_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(AGING), dir.path(), 1).unwrap();
    std::fs::write(dir.path().join("results.csv"), "ratio,empirical\n0.5,0.5\n").unwrap();
    let out = bin().args(["figure", dir.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ci_lo"));
    let empty = tempfile::tempdir().unwrap();
    let out = bin().args(["figure", empty.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analytics_command_prints_law_quantities() {
    let out = bin().args(["analytics", "1/4", "1/3", "5/12", "--beta", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["q"].as_f64().unwrap() - 0.6).abs() < 1e-10);
    assert!((v["beta_c"].as_f64().unwrap() - 1.2).abs() < 1e-8);
    assert!((v["alpha"].as_f64().unwrap() - 1.2f64.ln() / 2f64.ln()).abs() < 1e-8);
    assert!((v["m"].as_f64().unwrap() - 7.0 / 6.0).abs() < 1e-12);

    let out = bin().args(["analytics", "0", "1/2", "0", "1/2"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["sigma2"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert!(v["beta_c"].is_null());

    for bad in [vec!["analytics", "1/2", "1/3"], vec!["analytics", "x"], vec!["analytics"]] {
        assert_eq!(bin().args(&bad).output().unwrap().status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn btm_aging_tracks_the_arcsine_law() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(AGING), dir.path(), 1).unwrap();
    let t = Table::read(&dir.path().join("results.csv")).unwrap();
    let (e, a, r) = (t.column("empirical").unwrap(), t.column("arcsine").unwrap(), t.column("ratio").unwrap());
    for row in &t.rows {
        let ratio: f64 = row[r].parse().unwrap();
        let arcsine: f64 = row[a].parse().unwrap();
        // independent closed form at alpha = 1/2
        let oracle = 2.0 / std::f64::consts::PI * ratio.sqrt().asin();
        assert!((arcsine - oracle).abs() < 1e-10);
        let gap = (row[e].parse::<f64>().unwrap() - oracle).abs();
        assert!(gap <= 0.03, "ratio {ratio}: gap {gap}");
    }
}

/// Speed curve of the 1/10, 0, 9/10 law over beta = 0.6, 0.8, ..., 8.
#[test]
fn speed_curve_rises_peaks_and_vanishes() {
    let betas: Vec<f64> = (0..38).map(|i| (6 + 2 * i) as f64 / 10.0).collect();
    let json = serde_json::json!({
        "model": "gwtree", "seed": 2,
        "experiment": {"kind": "gw_speed_curve", "pmfs": [[0.1, 0.0, 0.9]], "betas": betas},
        "budget": {"steps": 1_000_000, "replicas": 20},
    });
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg(&json.to_string()), dir.path(), 1).unwrap();
    let t = Table::read(&dir.path().join("results.csv")).unwrap();
    assert_eq!(t.header, ["pmf", "beta", "v", "ci_lo", "ci_hi", "n_steps"]);
    let rows: Vec<[f64; 4]> =
        t.rows.iter().map(|r| [1, 2, 3, 4].map(|i| r[i].parse::<f64>().unwrap())).collect();
    let (peak_at, peak) = rows.iter().fold((0.0, f64::MIN), |acc, r| if r[1] > acc.1 { (r[0], r[1]) } else { acc });
    println!("peak v = {peak} at beta = {peak_at}");
    assert!(rows[0][1] < 0.1 * peak, "near 1/m = 5/9 the speed is small: {:?}", rows[0]);
    assert!(peak_at > 1.0 && peak_at < 5.0);
    let mut missed = Vec::new();
    for r in rows.iter().filter(|r| r[0] >= 5.0) {
        if !(r[2] <= 0.0 && 0.0 <= r[3]) {
            missed.push(format!("beta {}: v {:.4} CI [{:.4}, {:.4}]", r[0], r[1], r[2], r[3]));
        }
    }
    assert!(missed.is_empty(), "speed CI excludes 0 above beta_c = 5:\n{}", missed.join("\n"));
}

proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    #[test]
    fn resolved_config_round_trips(seed in 0u64..u64::MAX, replicas in 1usize..10_000, alpha in 0.05f64..1.95,
                                   workers in proptest::option::of(1usize..64)) {
        let mut c = cfg(AGING);
        c.seed = seed;
        c.budget.replicas = replicas;
        c.budget.workers = workers;
        if let expcli::Experiment::BtmAging { alpha: a, .. } = &mut c.experiment {
            *a = alpha;
        }
        let text = c.resolved_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(back.resolved_json(), text.clone());
        prop_assert_eq!(back.budget.workers, None);
        prop_assert_eq!(back.seed, seed);
    }
}
