use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_superliouville"));
    c.env_remove("SUPERLIOUVILLE_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superliouville-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn killing_below_one_is_a_usage_error() {
    let o = run(&["solve", "--branch", "killing", "--rho", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho must exceed 1"), "{}", stderr(&o));
}

#[test]
fn dirac_spectrum_csv() {
    let o = run(&["spectrum", "--band", "16", "--operator", "dirac"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,multiplicity,max_error"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        let m = r[0].abs();
        assert_eq!(m, m.round());
        assert_eq!(r[1], 4.0 * m);
        assert!(r[2] < 1e-12);
    }
}

#[test]
fn band_outside_range_is_rejected() {
    for band in ["4", "7", "65"] {
        let o = run(&["spectrum", "--band", band]);
        assert_eq!(o.status.code(), Some(2), "band {band}");
        assert!(stderr(&o).contains("[8, 64]"));
    }
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(run(&["spectrum", "--operator", "wave"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

fn write_table(path: &Path, rows: &[(f64, usize, f64)]) {
    let mut s = String::from("rho,J,J1,J2,residual,index_l,constraint_norm,psi_l2\n");
    for (rho, idx, psi) in rows {
        s.push_str(&format!("{rho},0,0,0,0,{idx},0,{psi}\n"));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn diagram_is_byte_identical_across_runs() {
    let dir = scratch("svg");
    let t = dir.join("trivial.csv");
    let k = dir.join("killing.csv");
    write_table(&t, &[(1.5, 4, 0.0), (1.75, 4, 0.0), (2.0, 4, 0.0), (2.25, 12, 0.0)]);
    write_table(&k, &[(1.5, 0, 2.64), (1.75, 0, 2.91), (2.0, 0, 3.07), (2.25, 0, 3.17)]);
    let list = format!("{},{}", t.display(), k.display());
    let a = run(&["bifurcate", "--diagram-only", "--branches", &list]);
    let b = run(&["bifurcate", "--diagram-only", "--branches", &list]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let svg = stdout(&a);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("stroke-dasharray").count(), 1);

    let out = dir.join("out");
    let c = run(&["bifurcate", "--diagram-only", "--branches", &list, "--out", out.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(fs::read(out.join("bifurcation.svg")).unwrap(), a.stdout);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("config");
    let cfg = dir.join("run.json");
    fs::write(&cfg, r#"{"band_limit": 8}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = run(&["spectrum", "--config", c]);
    assert_eq!(stdout(&from_file).lines().count(), 1 + 8);
    let flag = run(&["spectrum", "--config", c, "--band", "12"]);
    assert_eq!(stdout(&flag).lines().count(), 1 + 12);

    fs::write(&cfg, r#"{"band": 8}"#).unwrap();
    assert_eq!(run(&["spectrum", "--config", c]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch("env");
    let o = bin().args(["spectrum", "--operator", "laplace", "--band", "8"]).env("SUPERLIOUVILLE_OUT", &dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let file = fs::read_to_string(dir.join("spectrum_laplace.csv")).unwrap();
    assert_eq!(file, stdout(&o));
}

#[test]
fn verify_subset_passes() {
    let dir = scratch("verify");
    let o = run(&["verify", "--suite", "1,2,3", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.contains(" PASS ")).count(), 3);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn killing_solution_reports_seventeen_digits() {
    let o = run(&["solve", "--branch", "killing", "--rho", "1.5", "--band", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let rho = row.split(',').next().unwrap();
    assert_eq!(rho, "1.5000000000000000e+0");
}

#[test]
fn newton_failure_prints_a_json_report() {
    let dir = scratch("newton");
    let d = dir.to_str().unwrap();
    let o = run(&["solve", "--branch", "killing", "--rho", "1.5", "--band", "8", "--out", d]);
    assert_eq!(o.status.code(), Some(0));
    let cfg = dir.join("strict.json");
    fs::write(&cfg, r#"{"tolerances": {"max_iter": 1, "newton_tol": 1e-30}}"#).unwrap();
    let state = dir.join("solution.json");
    let o = run(&[
        "solve", "--branch", "newton", "--rho", "1.7", "--band", "8",
        "--state", state.to_str().unwrap(), "--config", cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "failed");
    assert_eq!(v["command"], "solve");
}
