use std::path::Path;
use std::process::{Command, Output};

use fluxlag::experiments::{Manifest, MANIFEST_FILE, METRICS_FILE, SNAPSHOT_HEADER};

fn fluxlag(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxlag"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FLUXLAG_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{
  "name": "small",
  "m": 2,
  "mesh": {"kind": "uniform", "n": 40},
  "initial": {"preset": "triangle", "params": {"half_width": 0.5}},
  "t_end": 0.02,
  "snapshot_times": [0.01, 0.02],
  "reference": "barenblatt"
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_good_document() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ok.json", SMALL);
    let o = fluxlag(&["validate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "ok: small");
}

#[test]
fn validate_reports_path_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("\"m\": 2", "\"m\": 0.5");
    let cfg = write(dir.path(), "bad.json", &bad);
    let o = fluxlag(&["validate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("/m"), "{err}");

    let unknown = SMALL.replace("\"t_end\"", "\"bogus\": 1, \"t_end\"");
    let cfg = write(dir.path(), "unknown.json", &unknown);
    let o = fluxlag(&["validate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));

    let nested = SMALL.replace("\"half_width\": 0.5", "\"half_width\": \"wide\"");
    let cfg = write(dir.path(), "nested.json", &nested);
    let o = fluxlag(&["validate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/initial/params/half_width"), "{}", stderr(&o));
}

#[test]
fn run_writes_outputs_under_env_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let root = dir.path().join("results");
    let o = Command::new(env!("CARGO_BIN_EXE_fluxlag"))
        .args(["run", "--config", &cfg])
        .current_dir(dir.path())
        .env("FLUXLAG_OUT", &root)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = root.join("small");
    let manifest = Manifest::read(&run).unwrap();
    assert_eq!(manifest.config.name, "small");
    assert_eq!(manifest.snapshots.len(), 3);
    for s in &manifest.snapshots {
        let text = std::fs::read_to_string(run.join(&s.file)).unwrap();
        assert_eq!(text.lines().next(), Some(SNAPSHOT_HEADER));
        assert_eq!(text.lines().count(), 1 + 38);
    }
    let metrics = std::fs::read_to_string(run.join(METRICS_FILE)).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(run.join(MANIFEST_FILE).exists());
    assert!(!dir.path().join("out").exists());

    // --out overrides the environment
    let other = dir.path().join("other");
    let o = Command::new(env!("CARGO_BIN_EXE_fluxlag"))
        .args(["run", "--config", &cfg, "--out"])
        .arg(&other)
        .current_dir(dir.path())
        .env("FLUXLAG_OUT", &root)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(other.join("small").join(MANIFEST_FILE).exists());
}

#[test]
fn rerun_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let read = || {
        let o = fluxlag(&["run", "--config", &cfg], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let run = dir.path().join("out").join("small");
        let m = Manifest::read(&run).unwrap();
        let snaps: Vec<String> = m
            .snapshots
            .iter()
            .map(|s| std::fs::read_to_string(run.join(&s.file)).unwrap())
            .collect();
        (snaps, std::fs::read_to_string(run.join(METRICS_FILE)).unwrap())
    };
    assert_eq!(read(), read());
}

#[test]
fn rates_prints_slope_last() {
    let dir = tempfile::tempdir().unwrap();
    let o = fluxlag(
        &["rates", "--m", "2", "--n", "40", "--t-end", "4", "--window", "1,4"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    let slope: f64 = last.strip_prefix("slope=").unwrap().parse().unwrap();
    assert!(slope < 0.0, "{slope}");
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = fluxlag(&["rates", "--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let h = stdout(&o);
    assert!(h.contains("[default: 5,50]"), "{h}");
    assert!(h.contains("FLUXLAG_OUT"), "{h}");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fluxlag(&["figure", "fig42"], dir.path()).status.code(), Some(1));
    assert_eq!(fluxlag(&["rates"], dir.path()).status.code(), Some(1));
    assert_eq!(
        fluxlag(&["rates", "--m", "2", "--window", "5"], dir.path()).status.code(),
        Some(1)
    );
    let o = fluxlag(&["run", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}
