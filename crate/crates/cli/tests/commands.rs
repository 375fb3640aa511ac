use std::path::Path;
use std::process::{Command, Output};

use esdp_cli::{read_results, ExperimentConfig};

fn esdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esdp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = esdp(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_solve_writes_report_and_sdpa() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    let report = dir.path().join("report.json");
    let sdpa = dir.path().join("prog.dat-s");
    ok(&[
        "generate",
        "--sensors",
        "6",
        "--anchors",
        "4",
        "--radio",
        "0.7",
        "--seed",
        "3",
        "--sigma",
        "0.05",
        "--noise-seed",
        "9",
        "--out",
        s(&net),
    ]);
    ok(&[
        "solve",
        "--net",
        s(&net),
        "--method",
        "pesdp",
        "--p",
        "0.1",
        "--sdpa",
        s(&sdpa),
        "--out",
        s(&report),
    ]);

    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["method"], "pesdp");
    assert_eq!(v["perturbation"], 0.1);
    assert_eq!(v["noise_std"], 0.05);
    assert_eq!(v["noise_seed"], 9);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["estimated_positions"].as_array().unwrap().len(), 6);
    let gap = v["primal_objective"].as_f64().unwrap() - v["dual_objective"].as_f64().unwrap();
    assert!((v["gap"].as_f64().unwrap() - gap).abs() <= 1e-12);
    for block in v["blocks"].as_array().unwrap() {
        assert_eq!(block["z_block"].as_array().unwrap().len(), 4);
        assert_eq!(block["perturbation"], 0.1);
    }

    let text = std::fs::read_to_string(&sdpa).unwrap();
    let problem = esdp_core::sdpa::SdpaProblem::parse(&text).unwrap();
    assert_eq!(problem.to_text(), text);
}

#[test]
fn solve_without_sigma_uses_exact_distances() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    let report = dir.path().join("report.json");
    ok(&[
        "generate",
        "--sensors",
        "4",
        "--anchors",
        "4",
        "--radio",
        "0.9",
        "--seed",
        "1",
        "--out",
        s(&net),
    ]);
    ok(&[
        "solve",
        "--net",
        s(&net),
        "--method",
        "esdp",
        "--out",
        s(&report),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["noise_std"], 0.0);
    assert!(v["primal_objective"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn sweep_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let results = dir.path().join("results.csv");
    let summary = dir.path().join("summary.csv");
    let plot = dir.path().join("plot.csv");
    let mut cfg = ExperimentConfig::desk();
    cfg.n = 6;
    cfg.m = 4;
    cfg.r = 0.6;
    cfg.sigma_grid = vec![0.0, 0.1];
    cfg.networks_per_cell = 2;
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();

    ok(&["sweep", "--config", s(&cfg_path), "--out", s(&results)]);
    let rows = read_results(&results).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let header = std::fs::read_to_string(&results)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("run_id,method,n,m,r,sigma,p,net_seed,noise_seed,status"));

    ok(&[
        "report",
        "--in",
        s(&results),
        "--out",
        s(&summary),
        "--plot-data",
        s(&plot),
    ]);
    let text = std::fs::read_to_string(&summary).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,cell,mean_PE,std_PE,mean_solve_time_s,count"
    );
    assert_eq!(lines.count(), 4);
    let plot_header = std::fs::read_to_string(&plot)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(plot_header.starts_with("cell,esdp_mean_PE"));
}

#[test]
fn bad_config_reports_location_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        "{\n  \"methods\": [\"esdp\"],\n  \"bogus\": 1\n}",
    )
    .unwrap();
    let out = esdp(&["sweep", "--config", s(&cfg_path)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_method_is_a_usage_error() {
    let out = esdp(&[
        "solve",
        "--net",
        "missing.json",
        "--method",
        "sdp",
        "--out",
        "x.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_prints_a_loadable_preset() {
    let out = ok(&["config", "--full-scale"]);
    let cfg =
        ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap(), Path::new("stdout"))
            .unwrap();
    assert_eq!(cfg.n, 300);
    assert_eq!(cfg.networks_per_cell, 50);
}
