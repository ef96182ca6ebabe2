//! End-to-end tests of the `henon` binary: exit codes, report files,
//! sweep CSVs, verification suites, and the kernel cache.

use std::path::Path;
use std::process::{Command, Output};

fn henon() -> Command {
    Command::new(env!("CARGO_BIN_EXE_henon"))
}

fn run(args: &[&str]) -> Output {
    henon().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small, fast reference discretization used throughout.
const FAST: &[&str] = &["--M", "80", "--R", "12"];

#[test]
fn solve_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let res = henon()
        .args(["solve", "--out"])
        .arg(&out)
        .args(FAST)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    assert!(stderr(&res).contains("classification: EXISTS_GUARANTEED"));
    let payload: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(payload["converged"], serde_json::Value::Bool(true));
    assert!(payload["residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(payload["values"].as_array().unwrap().len(), 80);
    assert_eq!(payload["grid"]["M"], serde_json::json!(80));
    assert!(payload["nehari_level"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_without_out_prints_report_to_stdout() {
    let res = henon().arg("solve").args(FAST).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    let payload: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(payload["params"]["q"], serde_json::json!(4.0));
}

#[test]
fn solve_rejects_subhomogeneous_exponent() {
    let res = run(&["solve", "--q", "2.0"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("q must exceed p"));
}

#[test]
fn solve_warns_in_the_nonexistence_regime() {
    let mut args = vec!["solve", "--q", "7.0"];
    args.extend_from_slice(FAST);
    let res = run(&args);
    assert!(stderr(&res).contains("nonexistence regime"));
    assert!(stderr(&res).contains("NONEXISTENCE_GUARANTEED"));
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let res = henon()
            .args(["solve", "--out"])
            .arg(out)
            .args(FAST)
            .output()
            .unwrap();
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn solve_reads_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("problem.conf");
    std::fs::write(&cfg, "q = 9.0 # overridden by the flag\nM = 80\nR = 12\n").unwrap();
    let res = henon()
        .args(["solve", "--config"])
        .arg(&cfg)
        .args(["--q", "4.5"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let payload: serde_json::Value = serde_json::from_str(&stdout(&res)).unwrap();
    assert_eq!(payload["params"]["q"], serde_json::json!(4.5));
    assert_eq!(payload["grid"]["M"], serde_json::json!(80));
}

#[test]
fn sweep_writes_csv_with_verdict_regions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let res = henon()
        .args(["sweep", "--sweep", "q=3.0:7.0:2.0", "--out"])
        .arg(&out)
        .args(FAST)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,p,q,s,gamma,alpha,beta,R,M,verdict,converged,nehari_level,residual,concentration_index,peak_radius"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3); // q = 3, 5, 7
    assert!(rows[0].contains("EXISTS_GUARANTEED"));
    assert!(rows[1].contains("EXISTS_GUARANTEED"));
    assert!(rows[2].contains("NONEXISTENCE_GUARANTEED"));
}

#[test]
fn sweep_rejects_empty_or_malformed_ranges() {
    let empty = run(&[
        "sweep",
        "--sweep",
        "q=5.0:2.0:1.0",
        "--out",
        "/tmp/unused.csv",
    ]);
    assert_eq!(empty.status.code(), Some(2), "stderr: {}", stderr(&empty));
    let garbage = run(&["sweep", "--sweep", "q=banana", "--out", "/tmp/unused.csv"]);
    assert_eq!(garbage.status.code(), Some(2));
    let unknown = run(&[
        "sweep",
        "--sweep",
        "R=1.0:2.0:1.0",
        "--out",
        "/tmp/unused.csv",
    ]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn two_axis_sweep_emits_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let res = henon()
        .args([
            "sweep",
            "--sweep",
            "q=3.5:4.5:1.0",
            "--sweep",
            "alpha=0.0:1.0:1.0",
            "--out",
        ])
        .arg(&out)
        .args(FAST)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let plot = std::fs::read_to_string(dir.path().join("grid.plot.csv")).unwrap();
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], "x,y,class");
    assert_eq!(lines.len(), 5); // header + 2x2 grid
    assert!(lines[1].starts_with("3.5,0,"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn verify_pohozaev_prints_threshold_and_passes() {
    let res = run(&["verify", "pohozaev"]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let text = stdout(&res);
    assert!(text.contains("threshold: 6"));
    assert!(text.contains("pohozaev: PASS"));
}

#[test]
fn verify_rejects_unknown_suite() {
    let res = run(&["verify", "nonsense"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("unknown suite"));
}

#[test]
fn verify_interpolation_and_scaling_pass() {
    let mut args = vec!["verify", "interpolation"];
    args.extend_from_slice(FAST);
    let res = run(&args);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    assert!(stdout(&res).contains("interpolation: PASS"));

    // Scaling needs beta > p(1 - s); the fractional defaults satisfy it.
    let res = run(&[
        "verify", "scaling", "--s", "0.5", "--gamma", "0.0", "--q", "2.5", "--M", "32", "--R",
        "8.0",
    ]);
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    assert!(stdout(&res).contains("scaling: PASS"));
}

#[test]
fn kernel_build_writes_cache_file() {
    let dir = tempfile::tempdir().unwrap();
    let res = henon()
        .args([
            "kernel", "build", "--N", "2", "--s", "0.5", "--gamma", "0.0", "--q", "2.5", "--M",
            "16", "--R", "8.0", "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let cached: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "hnkm"))
        .collect();
    assert_eq!(cached.len(), 1);
    assert!(stdout(&res).contains("kernel cache written"));
}

#[test]
fn kernel_build_uses_cache_dir_environment() {
    let dir = tempfile::tempdir().unwrap();
    let res = henon()
        .env("HENON_CACHE_DIR", dir.path())
        .args([
            "kernel", "build", "--N", "2", "--s", "0.5", "--gamma", "0.0", "--q", "2.5", "--M",
            "16", "--R", "8.0",
        ])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    assert!(!is_empty_dir(dir.path()));
}

#[test]
fn kernel_build_rejects_local_case() {
    let res = run(&["kernel", "build", "--out", "/tmp/unused-cache"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("s < 1"));
}

fn is_empty_dir(p: &Path) -> bool {
    std::fs::read_dir(p)
        .map(|mut d| d.next().is_none())
        .unwrap_or(true)
}
