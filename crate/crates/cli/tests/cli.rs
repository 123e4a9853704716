use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use lowmach_core::config::ExperimentConfig;
use lowmach_core::shipped_config;

fn lowmach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowmach"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn small_config() -> ExperimentConfig {
    let mut c = shipped_config("static").unwrap();
    c.name = "small".into();
    c.sweep.eps = vec![0.2];
    c.schedule.final_time = 0.05;
    c.schedule.snapshots = 5;
    c
}

fn write_config(dir: &Path, c: &ExperimentConfig) -> PathBuf {
    let p = dir.join(format!("{}.toml", c.name));
    fs::write(&p, c.canonical_text()).unwrap();
    p
}

/// One finished run shared by the tests; they copy it before tampering.
fn fixture() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), &small_config());
        let out = dir.path().join("run");
        let o = lowmach(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dir
    })
    .path()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            fs::copy(e.path(), target).unwrap();
        }
    }
}

fn tampered_copy() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    copy_dir(&fixture().join("run"), &run);
    (tmp, run)
}

fn first_density_file(run: &Path) -> PathBuf {
    let dir = run.join("snapshots/eps_0.2");
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("density"))
        .collect();
    files.sort();
    files.pop().unwrap()
}

#[test]
fn fresh_run_verifies() {
    let run = fixture().join("run");
    assert!(run.join("manifest.json").is_file());
    assert!(!run.join("INCOMPLETE").exists());
    for f in ["config.toml", "metrics.csv", "summary.csv", "energy_eps_0.2.csv", "spectrum.csv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let o = lowmach(&["verify", run.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.contains("PASS density_min"));
    assert!(stdout.contains("PASS energy_inequality"));
    assert!(stdout.contains("PASS reference_divergence"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn identical_configs_give_identical_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config());
    let out = tmp.path().join("again");
    let o = lowmach(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let first = fixture().join("run");
    for f in ["metrics.csv", "summary.csv", "manifest.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(out.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn deleted_snapshot_is_named() {
    let (_tmp, run) = tampered_copy();
    let victim = first_density_file(&run);
    fs::remove_file(&victim).unwrap();
    let o = lowmach(&["verify", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("missing artifact"), "{stderr}");
    assert!(stderr.contains(victim.file_name().unwrap().to_str().unwrap()), "{stderr}");
}

#[test]
fn corrupted_density_fails_a_named_check() {
    let (_tmp, run) = tampered_copy();
    let victim = first_density_file(&run);
    let text = fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // Left edge of the middle row, away from the obstacle.
    let k = 5 + lines.len() / 2;
    lines[k] = "-0.5".into();
    fs::write(&victim, lines.join("\n") + "\n").unwrap();
    let o = lowmach(&["verify", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL artifact_hashes"), "{stdout}");
    assert!(
        stdout.contains("FAIL density_min") || stdout.contains("FAIL energy_inequality"),
        "{stdout}"
    );
}

#[test]
fn incomplete_run_is_refused() {
    let (_tmp, run) = tampered_copy();
    fs::write(run.join("INCOMPLETE"), "").unwrap();
    let o = lowmach(&["verify", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("incomplete"));
}

#[test]
fn invalid_gamma_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c.physics.gamma = 1.4;
    let cfg = write_config(tmp.path(), &c);
    let o = lowmach(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma must exceed 3/2"));
}

#[test]
fn malformed_config_reports_position() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "name = \"x\"\n[geometry]\nradius = = 1\n").unwrap();
    let o = lowmach(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn increasing_eps_override_is_rejected() {
    let o = lowmach(&["sweep", "--config", "static", "--eps", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_horizon_sweep_writes_initial_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c.schedule.final_time = 0.0;
    let cfg = write_config(tmp.path(), &c);
    let out = tmp.path().join("t0");
    let o = lowmach(&["sweep", "--config", cfg.to_str().unwrap(), "--eps", "0.1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("snapshots/eps_0.1/density_0000.txt").is_file());
    assert!(out.join("snapshots/reference/velocity_x_0000.txt").is_file());
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut ints = 0;
    for line in metrics.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[5] == "int" {
            ints += 1;
            assert_eq!(cols[6].parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
    assert!(ints > 0);
}

#[test]
fn spectrum_starts_at_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = small_config();
    c.spectral.modes = 20;
    let cfg = write_config(tmp.path(), &c);
    let o = lowmach(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows[0], "index,eigenvalue");
    assert_eq!(rows.len(), 21);
    let l0: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(l0.abs() < 1e-8);
    let l1: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(l1 > 0.0);
}

#[test]
fn shipped_scenarios_are_listed() {
    let o = lowmach(&["scenario"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("default") && stdout.contains("static"));
    let o = lowmach(&["scenario", "default"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[geometry]"));
}
