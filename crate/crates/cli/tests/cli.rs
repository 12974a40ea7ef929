//! End-to-end tests of the binary: each exercises a subcommand through
//! `std::process::Command` exactly as a user would.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mecosim");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

/// A small, fast universe the tests share.
const SMALL: &str = "\
schema_version = 1

[run]
t_max = 90
seed = 11

[data.synthetic]
n_stocks = 4
";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary should spawn")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

#[test]
fn run_writes_the_csv_set_and_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("out");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    for file in ["prices.csv", "volumes.csv", "wealth.csv", "nav.csv", "events.csv"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["n_days"], 90);
    assert_eq!(manifest["n_stocks"], 4);
    assert_eq!(manifest["config"]["run"]["seed"], 11);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn malformed_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "schema_version = 1\n[run]\nt_max = \"soon\"\n");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    // A config that parses but asks for nothing to simulate is also a usage error.
    let cfg = write_config(tmp.path(), "schema_version = 1\n");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("data.csv or data.synthetic"));
}

#[test]
fn identical_config_and_seed_give_byte_identical_csvs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(exit_code(&run(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()])), 0);
    assert_eq!(
        exit_code(&run(&[
            "run",
            cfg.to_str().unwrap(),
            "--parallel",
            "--out",
            b.to_str().unwrap()
        ])),
        0
    );
    for file in ["prices.csv", "volumes.csv", "wealth.csv", "nav.csv", "events.csv"] {
        let bytes_a = std::fs::read(a.join(file)).unwrap();
        let bytes_b = std::fs::read(b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs between runs");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--seed",
        "99",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 99);
}

#[test]
fn seed_sweep_writes_one_subdirectory_per_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("sweep");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--seeds",
        "3..6",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for seed in 3..6 {
        let sub = out_dir.join(format!("seed-{seed}"));
        assert!(sub.join("prices.csv").exists());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sub.join("run_manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["seed"], seed);
    }
    let out = run(&["run", cfg.to_str().unwrap(), "--seeds", "7..7"]);
    assert_eq!(exit_code(&out), 2, "empty range is a usage error");
}

#[test]
fn env_var_supplies_the_default_output_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("from-env");
    let out = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap()])
        .env("MECOSIM_OUT", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("prices.csv").exists());
}

#[test]
fn test_strategy_emits_nav_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("strat");
    let out = run(&[
        "test-strategy",
        cfg.to_str().unwrap(),
        "--strategy",
        "equal_weight",
        "--no-flows",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let nav = std::fs::read_to_string(out_dir.join("nav.csv")).unwrap();
    assert_eq!(nav.lines().next(), Some("day,entity_id,value"));
    assert!(nav.contains(",strategy,"), "nav.csv should carry the strategy fund's series");

    let summary = std::fs::read_to_string(out_dir.join("strategy_summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("statistic,value"));
    let stats: Vec<&str> =
        lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(stats, ["total_return", "annualized_volatility", "max_drawdown"]);
}

#[test]
fn unknown_strategy_exits_2_and_lists_builtins() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = run(&[
        "test-strategy",
        cfg.to_str().unwrap(),
        "--strategy",
        "nosuch",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("equal_weight"), "stderr should list built-ins: {stderr}");
    assert!(stderr.contains("buy_and_hold"));
}

#[test]
fn validate_writes_facts_and_charts_and_uses_exit_1_for_failures() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run_dir = tmp.path().join("run");
    assert_eq!(
        exit_code(&run(&["run", cfg.to_str().unwrap(), "--out", run_dir.to_str().unwrap()])),
        0
    );
    let val_dir = tmp.path().join("val");
    let out = run(&[
        "validate",
        run_dir.join("prices.csv").to_str().unwrap(),
        run_dir.join("volumes.csv").to_str().unwrap(),
        "--out",
        val_dir.to_str().unwrap(),
    ]);
    // A 90-day run can't pass a battery that needs a year of monthly
    // returns; what matters is that it judges rather than crashes.
    assert_eq!(exit_code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall: fail"));

    let facts = std::fs::read_to_string(val_dir.join("stylized_facts.csv")).unwrap();
    assert!(facts.starts_with("statistic,value,verdict"));
    for chart in ["market_level.svg", "returns_acf.svg", "returns_hist.svg"] {
        let body = std::fs::read_to_string(val_dir.join(chart)).unwrap();
        assert!(body.starts_with("<svg "), "{chart} should be an SVG");
    }
}

#[test]
fn validate_rejects_wrong_schema_with_exit_2() {
    let tmp = TempDir::new().unwrap();
    let bogus = tmp.path().join("prices.csv");
    std::fs::write(&bogus, "time,ticker,price\n0,A,1.0\n").unwrap();
    let out = run(&[
        "validate",
        bogus.to_str().unwrap(),
        bogus.to_str().unwrap(),
        "--out",
        tmp.path().join("v").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn synth_data_writes_a_loadable_fundamentals_csv() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("data");
    let out = run(&[
        "synth-data",
        "--stocks",
        "3",
        "--quarters",
        "5",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let body = std::fs::read_to_string(out_dir.join("fundamentals.csv")).unwrap();
    assert_eq!(body.lines().count(), 1 + 3 * 5, "header plus one row per stock-quarter");

    // The generated file round-trips through a csv-backed run.
    let cfg = write_config(
        tmp.path(),
        &format!(
            "schema_version = 1\n[run]\nt_max = 40\n[data]\ncsv = \"{}\"\n",
            out_dir.join("fundamentals.csv").display()
        ),
    );
    let out = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
