use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn layercache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layercache"))
        .args(args)
        .env_remove("LAYERCACHE_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{
  "name": "small",
  "mode": "approx",
  "scenarios": [
    {
      "id": "two",
      "objects": 20,
      "zipf_exponent": 0.8,
      "versions": { "rule": "two", "alpha": 0.7 },
      "sizes": { "rule": "two-layer", "rho": 0.5 }
    }
  ],
  "policies": ["llru", "llfu"],
  "budgets": [2.0, 5.0],
  "requests": 20000,
  "replications": 2,
  "seed": 7
}"#;

#[test]
fn preset_dump_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = layercache(&["preset", "fig7", "--dump"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cfg = dir.path().join("fig7.json");
    fs::write(&cfg, out.stdout).unwrap();
    let v = layercache(&["validate", path(&cfg)]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    assert!(stdout(&v).starts_with("fig7: ok"));
}

#[test]
fn preset_list_names_every_figure() {
    let out = layercache(&["preset", "list"]);
    assert!(out.status.success());
    let names = stdout(&out);
    for n in ["fig2", "fig4", "fig11", "thm1"] {
        assert!(names.lines().any(|l| l == n), "missing {n}");
    }
}

#[test]
fn approx_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let out = layercache(&["approx", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "scenario_id,policy,B,d,v_or_l,kind,requests,hits,hit_prob,hit_rate,N,seed");
    assert_eq!(lines.filter(|l| l.contains("llru-approx")).count(), 2);
    let meta = fs::read_to_string(dir.path().join("small.meta.json")).unwrap();
    assert!(meta.contains("\"trace_seeds\""));
    assert!(meta.contains("\"alpha\": 0.7"));
}

#[test]
fn subcommand_sets_the_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let out = layercache(&["simulate", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("small.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains(",llfu,")));
    assert!(!csv.contains("approx"));
}

#[test]
fn simulation_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("small.json");
        fs::write(&cfg, SMALL).unwrap();
        let out = layercache(&["simulate", path(&cfg), "--out", path(dir.path())]);
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read_to_string(dir.path().join("small.csv")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn worker_override_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let mut csvs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(workers);
        let out = Command::new(env!("CARGO_BIN_EXE_layercache"))
            .args(["simulate", path(&cfg), "--out", path(&out_dir)])
            .env("LAYERCACHE_WORKERS", workers)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        csvs.push(fs::read_to_string(out_dir.join("small.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn invalid_alpha_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, SMALL.replacen("\"alpha\": 0.7", "\"alpha\": 1.2", 1)).unwrap();
    for cmd in ["validate", "approx"] {
        let out = layercache(&[cmd, path(&cfg)]);
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains("scenarios[0].versions.alpha"), "{}", stderr(&out));
    }
}

#[test]
fn mode_specific_requirements_are_checked() {
    // Policies are only required when simulating.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nopol.json");
    fs::write(&cfg, SMALL.replace("\"policies\": [\"llru\", \"llfu\"],", "")).unwrap();
    let ok = layercache(&["approx", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let bad = layercache(&["simulate", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(bad.status.code(), Some(2), "{}", stderr(&bad));
}

#[test]
fn malformed_json_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.json");
    fs::write(&cfg, SMALL.replace("\"seed\": 7", "\"seed\": 7, \"sede\": 8")).unwrap();
    let out = layercache(&["validate", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sede"));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = layercache(&["validate", path(&dir.path().join("absent.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_preset_and_bad_worker_count_exit_2() {
    assert_eq!(layercache(&["preset", "fig99"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_layercache"))
        .args(["preset", "list"])
        .env("LAYERCACHE_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_runs_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = layercache(&["preset", "fig3a", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("fig3a.csv").exists());
    assert!(dir.path().join("fig3a.meta.json").exists());
}
