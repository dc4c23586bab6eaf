//! End-to-end runs of the `maxlab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn maxlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

const SMALL: &str = r#"
young = ["power(1.5)", "power(2)"]
corpus = ["indicator(0.5)", "gauge-power(0.5)", "step"]
[grid]
lo = [-1.0]
hi = [1.0]
points = [129]
[family]
centers_stride = 8
r_max = 0.5
cover = true
[verify]
pairs = 2
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn default_verify_passes_within_a_minute() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let start = Instant::now();
    let o = maxlab(&["verify", "--out", path(&out)]);
    assert!(start.elapsed() < Duration::from_secs(60));
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["failed"], 0);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks
        .iter()
        .all(|c| c["anchor"].as_str().is_some_and(|a| !a.is_empty())));
    assert!(checks.iter().any(|c| c["name"] == "oracle-equivalence"));
}

#[test]
fn negative_control_exits_one_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("negative_control.toml");
    let o = maxlab(&[
        "verify",
        "--config",
        path(&config),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("FAIL almost-decreasing/power(1)/eps=0.5"),
        "{text}"
    );
    assert_eq!(
        text.lines().filter(|l| l.starts_with("FAIL")).count(),
        1,
        "{text}"
    );
}

#[test]
fn corrupted_field_csv_exits_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("gp.csv");
    let out = dir.path().join("out");
    let o = maxlab(&[
        "op",
        "--operator",
        "maxal",
        "--f",
        "gauge-power(0.5)",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("op_maxal.csv")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[9] = "0.5,not-a-number";
    fs::write(&field, lines.join("\n")).unwrap();

    let config = write_config(
        dir.path(),
        "run.toml",
        &SMALL
            .replace(
                "[grid]\nlo = [-1.0]\nhi = [1.0]\npoints = [129]",
                "[grid]\nlo = [-1.0]\nhi = [1.0]\npoints = [1025]",
            )
            .replace(r#""step"]"#, r#""step", "gp.csv"]"#),
    );
    let o = maxlab(&["verify", "--config", path(&config), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("gp.csv") && err.contains("row 10"), "{err}");
    assert!(!out.exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "seeds = 3\n");
    assert_eq!(
        maxlab(&["verify", "--config", path(&bad)]).status.code(),
        Some(2)
    );
    let too_fine = write_config(
        dir.path(),
        "fine.toml",
        &SMALL.replace("points = [129]", "points = [4097]"),
    );
    let o = maxlab(&[
        "verify",
        "--config",
        path(&too_fine),
        "--grid-scale",
        "large",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exceeds the limit"));
    let o = maxlab(&[
        "op",
        "--operator",
        "maxcomm",
        "--f",
        "step",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = maxlab(&[
        "norm",
        "--field",
        "no-such-tag(3)",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", SMALL);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        for args in [
            vec!["verify"],
            vec!["charac", "--b", "random-smooth(3)"],
            vec![
                "op",
                "--operator",
                "comm-sharp",
                "--f",
                "noise(2)",
                "--b",
                "gauge-power(0.5)",
            ],
        ] {
            let mut full = args.clone();
            full.extend([
                "--config",
                path(&config),
                "--out",
                path(&out),
                "--seed",
                "9",
            ]);
            assert_eq!(maxlab(&full).status.code(), Some(0));
        }
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn norm_emits_value_iterations_converged() {
    let dir = tempfile::tempdir().unwrap();
    let o = maxlab(&[
        "norm",
        "--field",
        "indicator(0.5)",
        "--young",
        "power(2)",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["converged", "iterations", "value"]);
    // 511 nodes of spacing 1/512 lie in (-0.5, 0.5).
    assert!((v["value"].as_f64().unwrap() - (511.0f64 / 512.0).sqrt()).abs() < 1e-9);
    assert_eq!(v["converged"], true);
}

#[test]
fn charac_outputs_and_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.toml", SMALL);
    let summary = |b: &str| -> serde_json::Value {
        let out = dir.path().join(b);
        let o = maxlab(&[
            "charac",
            "--config",
            path(&config),
            "--b",
            b,
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(out.join("charac_balls.csv").exists() && out.join("charac_plot.csv").exists());
        serde_json::from_slice(&fs::read(out.join("charac_summary.json")).unwrap()).unwrap()
    };
    let c = summary("constant(1)");
    for key in ["sup_f1", "sup_f2", "sup_f3", "sup_f4", "sup_lip_ball"] {
        assert!(c[key].as_f64().unwrap() <= 1e-6, "{key} = {}", c[key]);
    }
    let notes = |v: &serde_json::Value| v["verdict_notes"].to_string();
    assert!(notes(&summary("neg-gauge-power(0.5)")).contains("negative part detected"));
    let pos = summary("gauge-power(0.5)");
    assert!(!notes(&pos).contains("negative part detected"));
    assert_eq!(pos["scale_stable"], true);
}

#[test]
fn bench_checksums_match_the_oracle_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "run.toml",
        &SMALL.replace("points = [129]", "points = [65]"),
    );
    let checksums = |sub: &str| {
        let out = dir.path().join(sub);
        let o = maxlab(&["bench", "--config", path(&config), "--out", path(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut reader = csv::Reader::from_path(out.join("bench.csv")).unwrap();
        reader
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].to_string(), r[1].to_string(), r[6].to_string())
            })
            .collect::<Vec<_>>()
    };
    let first = checksums("a");
    assert_eq!(first.len(), 10);
    for pair in first.chunks(2) {
        assert_eq!((pair[0].0.as_str(), pair[1].0.as_str()), ("fast", "oracle"));
        assert_eq!(pair[0].2, pair[1].2, "{}", pair[0].1);
    }
    assert_eq!(first, checksums("b"));
}

#[test]
fn bench_skips_the_oracle_on_large_grids() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "h1.toml",
        r#"
young = ["power(2)"]
corpus = ["step"]
[group]
kind = "heisenberg1"
[grid]
lo = [-1.0, -1.0, -2.0]
hi = [1.0, 1.0, 2.0]
points = [33, 33, 33]
[family]
centers_stride = 8
r_max = 0.5
cover = true
"#,
    );
    let o = maxlab(&[
        "bench",
        "--config",
        path(&config),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("oracle skipped"));
    let text = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("fast,")).count(), 5);
    assert!(!text.contains("oracle,"));
}

#[test]
fn calibrate_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "h1.toml", "[group]\nkind = \"heisenberg1\"\n[grid]\nlo = [-1.0, -1.0, -2.0]\nhi = [1.0, 1.0, 2.0]\npoints = [9, 9, 9]\n");
    let o = maxlab(&[
        "calibrate",
        "--config",
        path(&config),
        "--resolution",
        "64",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c1 = v["c1"].as_f64().unwrap();
    let exact = std::f64::consts::PI.powi(2) / 2.0;
    assert!((c1 - exact).abs() / exact < 0.02, "{c1}");
    assert!(v["c0"].as_f64().unwrap() >= 1.0);
    assert_eq!(v["calibration"]["resolution"], 64);
}
