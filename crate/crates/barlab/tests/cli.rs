//! End-to-end tests of the `barlab` binary: exit-status classes, file
//! outputs and reproducibility of the four subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use barlab::data::ColumnMap;
use barlab::synth::{synthetic_universe, write_raw_csv};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_barlab"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn write_universe(dir: &Path, stocks: usize, days: usize) -> PathBuf {
    let data_dir = dir.join("data");
    fs::create_dir_all(&data_dir).unwrap();
    let columns = ColumnMap::default();
    for (stock_id, bars) in synthetic_universe(21, stocks, days) {
        let mut buf = Vec::new();
        write_raw_csv(&mut buf, &stock_id, &bars, &columns).unwrap();
        fs::write(data_dir.join(format!("{stock_id}.csv")), buf).unwrap();
    }
    data_dir
}

#[test]
fn missing_data_path_exits_with_config_class() {
    let output = run(&["ingest"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error:"), "stderr: {stderr}");
}

#[test]
fn missing_column_exits_with_config_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "trading date,open\n2020-01-02,10.0\n").unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "ingest",
        "--data",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn malformed_row_exits_with_data_class() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 10);
    // corrupt one numeric cell in data row 3
    let path = data.join("SYN001.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<&str> = lines[3].split(',').collect();
    fields[2] = "not-a-number";
    lines[3] = fields.join(",");
    fs::write(&path, lines.join("\n")).unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "ingest",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("row 3"), "stderr: {stderr}");
}

#[test]
fn ingest_writes_summary_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 30);
    let out = dir.path().join("out");
    let output = run(&[
        "ingest",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("30 rows in"), "stdout: {stdout}");
    let cleaned = fs::read_to_string(out.join("SYN001.cleaned.csv")).unwrap();
    assert!(cleaned.starts_with("# seed=42 config="));
    assert_eq!(cleaned.lines().count(), 32); // comment + header + 30 rows
}

#[test]
fn backtest_then_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 2, 60);
    let out = dir.path().join("out");
    let output = run(&[
        "backtest",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--model",
        "logistic",
        "--model",
        "svm",
        "--window",
        "40",
        "--fee",
        "10",
        "--notional",
        "1000",
    ]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out.join("metrics.json").is_file());
    assert!(out.join("timings.csv").is_file());
    assert!(out.join("plot_SYN001_logistic_simple.csv").is_file());
    assert!(out.join("plot_SYN002_svm_simple.csv").is_file());

    let output = run(&[
        "compare",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert!(out.join("compare_logistic.csv").is_file());
    assert!(out.join("compare_svm.csv").is_file());
    assert!(out.join("compare_counts.csv").is_file());
    assert!(out.join("compare.json").is_file());
    let table = fs::read_to_string(out.join("compare_logistic.csv")).unwrap();
    assert!(
        table.contains("metric,SYN001,SYN002,Avg."),
        "table: {table}"
    );
}

#[test]
fn compare_before_backtest_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 30);
    let out = dir.path().join("fresh");
    fs::create_dir_all(&out).unwrap();
    let output = run(&[
        "compare",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn sweep_emits_table_and_best_window() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 90);
    let out = dir.path().join("out");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "[data]\npath = \"{}\"\n[model]\nsweep_grid = [30, 45, 60]\n",
            data.display()
        ),
    )
    .unwrap();
    let output = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("best window"), "stdout: {stdout}");
    let table = fs::read_to_string(out.join("sweep_SYN001_logistic.csv")).unwrap();
    assert!(table.contains("window,revenue_percent,skipped_reason"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn sweep_with_fixed_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 80);
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "[data]\npath = \"{}\"\n[model]\nsweep_grid = [30, 50]\n[run]\nseed = 9\n",
            data.display()
        ),
    )
    .unwrap();
    let mut tables = Vec::new();
    for out_name in ["out_a", "out_b"] {
        let out = dir.path().join(out_name);
        let output = run(&[
            "sweep",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(output.status.code(), Some(0));
        tables.push(fs::read(out.join("sweep_SYN001_logistic.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn out_dir_env_override_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 30);
    let env_out = dir.path().join("env_out");
    let output = binary()
        .args(["ingest", "--data", data.to_str().unwrap()])
        .env("BARLAB_OUT", env_out.to_str().unwrap())
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(0));
    assert!(env_out.join("SYN001.cleaned.csv").is_file());
}

#[test]
fn threshold_flags_flow_through_backtest() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_universe(dir.path(), 1, 60);
    let out = dir.path().join("out");
    let output = run(&[
        "backtest",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--window",
        "40",
        "--strategy",
        "threshold",
        "--buy-threshold",
        "0.01",
        "--sell-threshold",
        "0.04",
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert!(out.join("plot_SYN001_logistic_threshold.csv").is_file());
}
