use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_combfisher"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn value(report: &Value, quantity: &str) -> f64 {
    report["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|q| q["quantity"] == quantity)
        .unwrap_or_else(|| panic!("no `{quantity}`"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn state_qfi_with_defaults() {
    let out = run(&["qfi-state"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json_of(&out);
    assert_eq!(r["experiment"], "qfi-state");
    assert!((value(&r, "qfi") - 1.0).abs() < 1e-8);
    assert!(r["violations"].as_array().unwrap().is_empty());
}

#[test]
fn odd_protected_dimension_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.toml", "seed = 1\n[parameters]\nd = 3\n");
    let out = run(&["protected", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("D even"));
}

#[test]
fn malformed_and_unseeded_configs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "parameters = [[[");
    assert_eq!(
        run(&["qfi-state", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
    assert_eq!(
        run(&["qfi-state", "--config", "/nonexistent/x.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn same_seed_gives_identical_reports() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_s");
        serde_json::to_string(&v).unwrap()
    };
    let args = ["twirl-check", "--seed", "3", "--threads", "1"];
    let a = strip(json_of(&run(&args)));
    let b = strip(json_of(&run(&args)));
    assert_eq!(a, b);
    let c = strip(json_of(&run(&["twirl-check", "--seed", "4"])));
    assert_ne!(a, c);
}

#[test]
fn protected_report_contents() {
    let out = run(&["protected", "--seed", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json_of(&out);
    assert!((value(&r, "optimal_qfi") - 1.0).abs() < 1e-12);
    assert!(value(&r, "parallel_qfi") <= 1.0 + 1e-8);
    assert!(value(&r, "ratio") >= 1.0 - 1e-8);
    assert_eq!(r["details"]["tightness"]["holds"], true);
}

#[test]
fn bound_reports_dimension_factor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.toml",
        "seed = 5\n[parameters]\nphases = 2\ncombs = 2\nsensors = 4\nstarts = 8\n",
    );
    let out = run(&["bound", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json_of(&out);
    assert_eq!(value(&r, "dim_factor"), 4.0);
    assert_eq!(r["details"]["instances"][0]["dim_factor"], 4);
}

#[test]
fn csv_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = run(&[
        "estimate",
        "--seed",
        "2",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,quantity,theta,value,tolerance")
    );
    assert!(lines.all(|l| l.starts_with("estimate,")));
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut count = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let experiment = text
            .lines()
            .find_map(|l| l.strip_prefix("experiment = "))
            .unwrap()
            .trim_matches('"')
            .to_string();
        let out_path = dir.path().join(format!("{experiment}.out"));
        let out = run(&[
            &experiment,
            "--config",
            path.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out_path.exists());
        count += 1;
    }
    assert!(count >= 6);
}
