use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use netshield_core::graph::read_edge_list;
use netshield_core::{AllocationResult, EfficiencyReport};

fn netshield(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netshield"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.in.json");
    fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_worstcase_writes_the_counterexample_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["gen-worstcase", "--n", "3", "--m", "6"]);
    assert!(out.status.success());
    let g = read_edge_list(dir.path().join("graph.csv")).unwrap();
    assert_eq!(g.node_count(), 9);
    assert_eq!(g.edge_count(), 24);
    assert_eq!(
        g,
        netshield_core::heuristics::worst_case_graph(3, 6).unwrap()
    );
    assert!(dir.path().join("graph.csv.meta.json").exists());
}

#[test]
fn gen_worstcase_rejects_short_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["gen-worstcase", "--n", "3", "--m", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_default_reproduces_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["compare"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: EfficiencyReport = read_json(&dir.path().join("report.json"));
    assert_eq!(report.strategies.len(), 4);
    for row in &report.strategies {
        assert!(row.epsilon < 0.0);
        assert!(row.q.abs() <= 1e-8);
    }
    assert!(report.optimum.epsilon > 0.0);
    assert_eq!(report.optimum.q, 1.0);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn compare_on_complete_graph_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let mut edges = String::new();
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                edges += &format!("{i},{j},1.0\n");
            }
        }
    }
    fs::write(dir.path().join("k5.csv"), edges).unwrap();
    let graph = dir.path().join("k5.csv").display().to_string();
    let out = netshield(
        dir.path(),
        &[
            "compare",
            "--graph",
            &graph,
            "--budget",
            "2",
            "--strategy",
            "out-degree",
            "--strategy",
            "in-degree",
            "--strategy",
            "total-degree",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: EfficiencyReport = read_json(&dir.path().join("report.json"));
    assert_eq!(report.strategies.len(), 3);
    for row in &report.strategies {
        assert_eq!(row.rates, report.strategies[0].rates);
        assert_eq!(row.q, report.strategies[0].q);
    }
}

#[test]
fn compare_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["compare", "--sweep", "0:3:7"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let eps: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(eps.len(), 7);
    for w in eps.windows(2) {
        assert!(w[1] >= w[0] - 1e-7, "{eps:?}");
    }
}

#[test]
fn solve_single_node_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.csv"), "0,0,1.0\n").unwrap();
    let config = write_config(
        dir.path(),
        r#"{"graph": "one.csv", "parameterization": "edge-level", "budget": 1.0,
            "prevention": {"family": "workstation", "lo": 0.01, "hi": 0.5}, "delta": 0.3}"#,
    );
    let out = netshield(dir.path(), &["solve", "--config", &config]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: AllocationResult = read_json(&dir.path().join("result.json"));
    assert!((r.beta[0] - 0.01).abs() < 1e-6);
    assert!((r.epsilon - 0.29).abs() < 1e-6);
    assert!(r.certification.passed);
    let scatter = fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
    assert!(scatter.starts_with("node,correction_spend,prevention_spend,in_degree,pagerank\n"));
}

#[test]
fn solve_zero_budget_returns_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["solve", "--budget", "0"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: AllocationResult = read_json(&dir.path().join("result.json"));
    assert!(r.beta.iter().all(|&b| b == 0.5));
    assert!((r.epsilon + 0.2).abs() < 1e-9);
}

#[test]
fn missing_graph_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["solve", "--graph", "/nonexistent/graph.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/graph.csv"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        netshield(dir.path(), &["solve", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        netshield(dir.path(), &["compare", "--strategy", "betweenness"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn infeasible_budget_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // 1/β costs 2 even at the unprotected rate 0.5
    let config = write_config(
        dir.path(),
        r#"{"budget": 1.0, "prevention": {"family": "custom-posynomial", "terms": [[1.0, -1.0]],
            "offset": 0.0, "lo": 0.01, "hi": 0.5}, "worstcase": {"n": 1, "m": 4}}"#,
    );
    let out = netshield(dir.path(), &["solve", "--config", &config]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gseiv_zero_transmission_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"gseiv": {"beta_e": 0.0, "beta_i": 0.0}}"#);
    let out = netshield(dir.path(), &["gseiv-check", "--config", &config]);
    assert!(out.status.success());
    let v: serde_json::Value = read_json(&dir.path().join("gseiv.json"));
    assert_eq!(v["verdict"], "stable");
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("stable"));
}

#[test]
fn simulate_decays_at_least_at_optimal_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = netshield(dir.path(), &["simulate"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = read_json(&dir.path().join("decay.json"));
    let eps = v["epsilon"].as_f64().unwrap();
    let rate = v["fitted_rate"].as_f64().unwrap();
    assert!(eps > 0.0);
    assert!(rate >= eps - 0.02, "rate {rate} vs ε {eps}");
}

#[test]
fn simulate_reads_stored_rates() {
    let dir = tempfile::tempdir().unwrap();
    let solve_dir = dir.path().join("solve");
    assert!(netshield(&solve_dir, &["solve"]).status.success());
    let config = write_config(
        dir.path(),
        r#"{"simulate": {"rates": "solve/result.json", "t_end": 20.0}}"#,
    );
    let sim_dir = dir.path().join("sim");
    let out = netshield(&sim_dir, &["simulate", "--config", &config]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = read_json(&sim_dir.join("decay.json"));
    assert!((v["epsilon"].as_f64().unwrap() - 0.3 + 0.5 / 25.5).abs() < 1e-5);
}

#[test]
fn generated_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(netshield(dir.path(), &["solve"]).status.success());
    let text = fs::read_to_string(dir.path().join("result.json")).unwrap();
    let r: AllocationResult = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);
    let config = fs::read_to_string(dir.path().join("config.json")).unwrap();
    let again = tempfile::tempdir().unwrap();
    let path = again.path().join("c.json");
    fs::write(&path, &config).unwrap();
    let out = netshield(again.path(), &["solve", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(again.path().join("config.json")).unwrap(),
        config
    );
}

fn numeric_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn identical_seed_gives_identical_files() {
    for args in [
        &["gillespie", "--seed", "11"][..],
        &["compare"],
        &["simulate"],
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(netshield(a.path(), args).status.success());
        assert!(netshield(b.path(), args).status.success());
        let fa = numeric_outputs(a.path());
        assert!(fa.len() >= 4);
        assert_eq!(fa, numeric_outputs(b.path()), "{args:?}");
    }
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(netshield(a.path(), &["gillespie", "--seed", "1"])
        .status
        .success());
    assert!(netshield(b.path(), &["gillespie", "--seed", "2"])
        .status
        .success());
    assert_ne!(
        fs::read(a.path().join("extinction.csv")).unwrap(),
        fs::read(b.path().join("extinction.csv")).unwrap()
    );
}
