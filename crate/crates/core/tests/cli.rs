use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magvirial"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const ZERO_RUN: &str = r#"{
  "dim": 2,
  "grid": { "extent": 5.0, "points": 16 },
  "time": { "dt": 0.01, "t_end": 0.1, "cadence": 2 },
  "initial": { "kind": "zero" }
}"#;

#[test]
fn zero_data_run_completes_with_zero_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "zero.json", ZERO_RUN);
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["termination"], "completed");
    assert_eq!(s["software_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(s["grid"]["points"], 16);

    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,mass,energy,Q,Qdot,Qddot_rhs,virial_residual,sup_norm,h1A,boundary_mass_frac,F,Fdot,Hfun"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 13);
        // mass, energy, Q and Q̈ are zero; wave-only columns are empty
        for c in &cells[1..4] {
            assert_eq!(c.parse::<f64>().unwrap(), 0.0);
        }
        assert_eq!(&cells[10..], &["", "", ""]);
    }
}

#[test]
fn malformed_configs_exit_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(tmp.path(), "unknown.json", &ZERO_RUN.replace("\"dim\": 2", "\"dim\": 2, \"dimm\": 3"));
    let o = run(&["run", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dimm") && err.contains("line"), "{err}");

    let broken = write_config(tmp.path(), "broken.json", "{ \"dim\": 2,\n  \"grid\": ");
    let o = run(&["run", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let bad_grid = write_config(tmp.path(), "grid.json", &ZERO_RUN.replace("\"points\": 16", "\"points\": 12"));
    assert_eq!(run(&["run", "--config", bad_grid.to_str().unwrap()]).status.code(), Some(2));

    let missing = tmp.path().join("missing.json");
    assert_eq!(run(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn runs_are_byte_reproducible_and_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "random.json",
        r#"{
  "dim": 2,
  "grid": { "extent": 8.0, "points": 32 },
  "time": { "dt": 0.002, "t_end": 0.1, "cadence": 5 },
  "potential": { "magnetic": { "kind": "linear" }, "electric": { "kind": "inverse_quadratic", "strength": 1.0 } },
  "initial": { "kind": "random", "amplitude": 1.0 },
  "seed": 3
}"#,
    );
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    let c = cfg.to_str().unwrap();
    for (d, seed) in dirs.iter().zip(["3", "3", "4"]) {
        let o = run(&["--seed", seed, "run", "--config", c, "--out", d.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &PathBuf| std::fs::read(d.join("series.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
    assert_ne!(read(&dirs[0]), read(&dirs[2]));
    assert_ne!(summary(&dirs[0])["config_hash"], summary(&dirs[2])["config_hash"]);
}

#[test]
fn negative_energy_preset_detects_blowup() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        "--config",
        preset("nls_blowup_free.json").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(tmp.path());
    assert_eq!(s["termination"], "blowup_detected");
    assert!(s["initial_energy"].as_f64().unwrap() < 0.0);
    assert_eq!(s["bounds"]["quadratic_16"]["applicable"], true);
    assert!(s["t_detect"].as_f64().unwrap() <= 1.1 * s["bounds"]["quadratic_16"]["root"].as_f64().unwrap());
}

#[test]
fn hypotheses_command() {
    let o = run(&["hypotheses", "--config", preset("singular_r2.json").to_str().unwrap()]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["schrodinger_smallness"]["passed"], true);
    assert_eq!(r["wave_smallness"]["passed"], true);
    assert!(r["trapping_sup_weight2"].as_f64().unwrap() < 1e-12);

    let tmp = tempfile::tempdir().unwrap();
    let n4 = write_config(tmp.path(), "n4.json", r#"{ "dim": 4, "grid": { "extent": 4.0, "points": 16 } }"#);
    let r: Value = serde_json::from_slice(&run(&["hypotheses", "--config", n4.to_str().unwrap()]).stdout).unwrap();
    assert_eq!(r["schrodinger_smallness"]["rhs"], 2.0);

    // 2π c ln(1 + r²) at r = 2 exceeds π once c > 1/(2 ln 5)
    let deep = write_config(
        tmp.path(),
        "deep.json",
        r#"{ "dim": 3, "grid": { "extent": 8.0, "points": 64 },
             "potential": { "magnetic": { "kind": "zero" }, "electric": { "kind": "inverse_quadratic", "strength": -0.5 } },
             "hypotheses": { "kato_radius": 2.0 } }"#,
    );
    let o = run(&["hypotheses", "--config", deep.to_str().unwrap()]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["kato"]["passed"], false);
}

#[test]
fn verify_respects_tolerance_override() {
    let o = run(&["verify", "calculus"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("criterion\tcheck\tvalue\tlimit\tresult"));
    let o = bin().args(["verify", "calculus"]).env("MAGVIRIAL_TOL_SCALE", "1e-30").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn scan_sweeps_amplitude_across_energy_root() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "--threads",
        "2",
        "scan",
        "--config",
        preset("scan_amplitude.json").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("scan.json")).unwrap()).unwrap();
    let amps: Vec<f64> = rows.iter().map(|r| r["point"]["amplitude"].as_f64().unwrap()).collect();
    assert_eq!(amps, [1.6, 1.8, 1.9, 2.1, 2.2, 2.4]);
    for r in &rows {
        let a = r["point"]["amplitude"].as_f64().unwrap();
        let e = r["summary"]["initial_energy"].as_f64().unwrap();
        assert_eq!(e < 0.0, a > 2.0, "a = {a}, E = {e}");
    }
    assert!(std::fs::read_to_string(tmp.path().join("scan.csv")).unwrap().lines().count() == 7);
}

#[test]
fn single_point_scan_matches_run_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#"{
  "dim": 2,
  "grid": { "extent": 6.0, "points": 32 },
  "time": { "dt": 0.002, "t_end": 0.02, "cadence": 5 },
  "initial": { "kind": "gaussian", "amplitude": 1.7, "width": 1.0 }SCAN
}"#;
    let run_cfg = write_config(tmp.path(), "run.json", &base.replace("SCAN", ""));
    let scan_cfg = write_config(tmp.path(), "scan.json", &base.replace("SCAN", r#", "scan": { "amplitude": [1.7] }"#));
    let run_dir = tmp.path().join("run");
    let scan_dir = tmp.path().join("scan");
    assert!(run(&["run", "--config", run_cfg.to_str().unwrap(), "--out", run_dir.to_str().unwrap()]).status.success());
    assert!(run(&["scan", "--config", scan_cfg.to_str().unwrap(), "--out", scan_dir.to_str().unwrap()]).status.success());
    let rows: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(scan_dir.join("scan.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["summary"], summary(&run_dir));

    let empty = write_config(tmp.path(), "empty.json", &base.replace("SCAN", r#", "scan": { "amplitude": [] }"#));
    assert_eq!(run(&["scan", "--config", empty.to_str().unwrap()]).status.code(), Some(2));
    let none = write_config(tmp.path(), "none.json", &base.replace("SCAN", r#", "scan": {}"#));
    assert_eq!(run(&["scan", "--config", none.to_str().unwrap()]).status.code(), Some(2));
}
