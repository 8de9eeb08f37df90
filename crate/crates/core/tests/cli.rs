use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use opgeo::io::matrix_to_json;
use opgeo::matfun::{real_diag, CMatrix};

fn opgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opgeo")).args(args).env_remove("OPGEO_SEED").output().expect("spawn opgeo")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, x: &CMatrix) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, matrix_to_json(x)).unwrap();
    path
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

#[test]
fn help_and_version_exit_zero() {
    let h = opgeo(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
    assert!(stdout(&h).contains("verify"));
    assert_eq!(opgeo(&["--version"]).status.code(), Some(0));
}

#[test]
fn positive_distance_and_geodesic_samples() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &real_diag(&[1.0, 1.0]));
    let q = write(dir.path(), "q.json", &real_diag(&[std::f64::consts::E, 1.0]));
    let o = opgeo(&["distance", "--metric", "positive", p.to_str().unwrap(), q.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((json(&o)["distance"].as_f64().unwrap() - 1.0).abs() < 1e-14);

    let o = opgeo(&[
        "geodesic",
        "--manifold",
        "spd",
        p.to_str().unwrap(),
        q.to_str().unwrap(),
        "--samples",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('t')).collect();
    assert_eq!(rows.len(), 5, "{text}");
}

#[test]
fn left_metric_prints_an_upper_bound() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &real_diag(&[1.0, 2.0]));
    let q = write(dir.path(), "q.json", &real_diag(&[3.0, 0.5]));
    let o = opgeo(&["distance", "--metric", "left", p.to_str().unwrap(), q.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!(v.get("distance").is_none());
    let ub = v["upper_bound"].as_f64().unwrap();
    assert!(ub <= v["constant_times_polar_distance"].as_f64().unwrap() + 1e-9);
}

#[test]
fn polar_and_norm_commands() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", &real_diag(&[-2.0, 3.0]));
    let o = opgeo(&["polar", g.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["residual"].as_f64().unwrap() < 1e-15);
    let o = opgeo(&["norm", g.to_str().unwrap(), "--p", "inf"]);
    assert!((json(&o)["norm"].as_f64().unwrap() - 3.0).abs() < 1e-15);
    let o = opgeo(&["norm", g.to_str().unwrap(), "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("InvalidP"));
}

#[test]
fn verify_writes_report_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = opgeo(&["verify", "bound", "--trials", "5", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).is_empty());
        assert!(stderr(&o).contains("bound: pass"));
    }
    let read = |p: &Path| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
    let (ra, rb) = (read(&a), read(&b));
    assert_eq!(ra["records_digest"], rb["records_digest"]);
    assert_eq!(ra["trials"], rb["trials"]);
    assert_eq!(ra["config"]["seed"], 7);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 11, "trials": 2}"#).unwrap();
    let seed_of = |o: &Output| json(o)["config"]["seed"].as_u64().unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_opgeo"));
        c.args(args).env_remove("OPGEO_SEED");
        if let Some(s) = env {
            c.env("OPGEO_SEED", s);
        }
        c.output().unwrap()
    };
    let c = cfg.to_str().unwrap();
    assert_eq!(seed_of(&run(&["verify", "cartan", "--trials", "2"], Some("5"))), 5);
    assert_eq!(seed_of(&run(&["verify", "cartan", "--config", c], Some("5"))), 11);
    assert_eq!(seed_of(&run(&["verify", "cartan", "--config", c, "--seed", "3"], Some("5"))), 3);
    assert_eq!(seed_of(&run(&["verify", "cartan", "--trials", "2"], None)), 1);
}

#[test]
fn error_exit_codes() {
    let o = opgeo(&["verify", "no_such_suite"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("closed_form"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"trails": 3}"#).unwrap();
    assert_eq!(opgeo(&["verify", "bound", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(opgeo(&["verify", "bound", "--group", "symplectic", "--dim", "3"]).status.code(), Some(2));

    let singular = write(dir.path(), "s.json", &real_diag(&[1.0, 0.0]));
    let o = opgeo(&["distance", "--metric", "polar", singular.to_str().unwrap(), singular.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("Singular"));

    let o = opgeo(&["algebra", "--kind", "symplectic", "--dim", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("OddDimension"));
}

#[test]
fn algebra_spec_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = opgeo::subgroups::builtin_algebra(opgeo::subgroups::BuiltinKind::Unitary, 2).unwrap();
    let path = dir.path().join("u2.json");
    std::fs::write(&path, serde_json::to_string(&spec.to_file()).unwrap()).unwrap();
    let o = opgeo(&["algebra", "--spec-file", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == "dim_k").unwrap();
    assert_eq!(row[k].parse::<f64>().unwrap(), 4.0);
}
