use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stopsum(args: &[&str]) -> Output {
    stopsum_in(Path::new("."), args)
}

fn stopsum_in(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stopsum"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STOPSUM_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn no_arguments_prints_usage() {
    let o = stopsum(&[]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&stopsum(&["dist", "--alpha", "2", "--colour", "red"])), 64);
    assert_eq!(code(&stopsum(&["frobnicate"])), 64);
}

/// `zeta(2)` from partial sums plus an Euler-Maclaurin tail.
fn zeta2() -> f64 {
    let n = 1_000_000u64;
    let head: f64 = (1..n).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum();
    let x = n as f64;
    head + 1.0 / x + 0.5 / (x * x) + 1.0 / (6.0 * x * x * x)
}

#[test]
fn dist_writes_the_two_point_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = stopsum(&["dist", "--alpha", "2", "--tmax", "2", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("dist.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,prob"));
    let rows: Vec<(i64, f64)> = lines
        .map(|l| {
            let (t, p) = l.split_once(',').unwrap();
            (t.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    let z = zeta2();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].0, rows[1].0), (1, 2));
    assert!((rows[0].1 - 1.0 / z).abs() < 1e-12);
    assert!((rows[1].1 - 0.25 / z).abs() < 1e-12);
    assert!(!dir.path().join(".stopsum.lock").exists());
}

#[test]
fn invalid_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(code(&stopsum(&["dist", "--alpha", "0.5", "--out", &out])), 2);
    assert_eq!(code(&stopsum(&["dist", "--out", &out])), 2);
    assert_eq!(code(&stopsum(&["clustering", "--beta=-1", "--out", &out])), 2);
}

#[test]
fn oversized_support_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = stopsum(&["dist", "--alpha", "2", "--tmax", "1000000000000", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_regime1_passes_with_ratio_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = stopsum(&[
        "verify", "regime1", "--alpha", "2.5", "--gamma", "4", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));
    let csv = fs::read_to_string(dir.path().join("regime1/ratio.csv")).unwrap();
    assert!(csv.starts_with("t,exact,predicted,ratio,error_budget\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".stopsum.lock"), "1").unwrap();
    let o = stopsum(&["dist", "--alpha", "2", "--tmax", "4", "--out", &out_arg(dir.path())]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("locked"));
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "metadata.json" {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical_outside_the_sidecar() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    // Same relative output path, so the emitted configs match too.
    for (d, workers) in [(&a, "1"), (&b, "3")] {
        let o = stopsum_in(
            d.path(),
            &["rig", "--size", "3000", "--seed", "11", "--workers", workers, "--plots", "--out", "run"],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (a.path().join("run"), b.path().join("run"));
    let (x, y) = (artifacts(&a), artifacts(&b));
    assert!(x.iter().any(|(n, _)| n == "edges.txt"));
    assert_eq!(x, y);
    let meta = fs::read_to_string(a.join("metadata.json")).unwrap();
    assert!(meta.contains("finished_unix_seconds"));
}

#[test]
fn emitted_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = stopsum(&["clustering", "--kmax", "64", "--alpha", "8", "--gamma", "6.5", "--out", &out_arg(a.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let config = a.path().join("config.json");
    let o = stopsum(&["clustering", "--config", config.to_str().unwrap(), "--out", &out_arg(b.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(a.path().join("clustering.csv")).unwrap(),
        fs::read(b.path().join("clustering.csv")).unwrap()
    );
}

#[test]
fn config_with_unknown_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"command": "dist", "out": "x", "params": {"alfa": 2}}"#).unwrap();
    let o = stopsum(&["dist", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
