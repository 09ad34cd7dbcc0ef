use std::path::Path;
use std::process::{Command, Output};

fn lipp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn generate(dir: &Path, dist: &str, n: &str) -> String {
    let file = dir.join(format!("{dist}.bin")).to_string_lossy().into_owned();
    let o = lipp(&["generate", "--dist", dist, "--n", n, "--out", &file, "--seed", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    file
}

#[test]
fn generate_reports_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("k.bin");
    let o = lipp(&["generate", "--dist", "lognormal", "--n", "1000", "--out", file.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count"], 1000);
    assert_eq!(v["dist"], "lognormal");
    assert_eq!(std::fs::metadata(&file).unwrap().len(), 24 + 8 * 1000);
}

#[test]
fn run_with_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "uniform", "20000");
    let o = lipp(&[
        "run", "--data", &data, "--workload", "write-heavy", "--ops", "6000", "--baseline", "--alpha", "0.2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["index"], "lipp");
    assert_eq!(v["workload"], "write-heavy");
    assert_eq!(v["inserts"], 4020);
    assert_eq!(v["lookups"], 1980);
    assert_eq!(v["errors"], 0);
    assert_eq!(v["alpha"], 0.2);
    assert!(v["throughput_ratio"].as_f64().unwrap() > 0.0);
    assert!(v["dataset_path"].as_str().unwrap().ends_with("uniform.bin"));
}

#[test]
fn sweep_writes_one_csv_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "uniform", "20000");
    let o = lipp(&["sweep", "--data", &data, "--param", "beta", "--values", "1.5,2,3", "--workload", "write-heavy", "--ops", "3000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_reader(o.stdout.as_slice());
    let beta = rd.headers().unwrap().iter().position(|h| h == "beta").unwrap();
    let rows: Vec<f64> = rd.records().map(|r| r.unwrap()[beta].parse().unwrap()).collect();
    assert_eq!(rows, vec![1.5, 2.0, 3.0]);
}

#[test]
fn verify_passes_and_detects_faults() {
    let o = lipp(&["verify", "--suite", "fmcd", "--cases", "200"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("PASS fmcd"));
    let o = lipp(&["verify", "--suite", "fmcd", "--cases", "200", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL fmcd"));
}

#[test]
fn errors_exit_nonzero() {
    let o = lipp(&["run", "--data", "/nonexistent/keys.bin"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = lipp(&["generate", "--dist", "zipf"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), "uniform", "1000");
    let o = lipp(&["sweep", "--data", &data, "--param", "alpha", "--values", "0.1,-1"]);
    assert_eq!(o.status.code(), Some(1));
}
