use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SQUARE: &str = r#"{"family":"square","params":{},"h":0.0625}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divjohn")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn rasterize_round_trips_through_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("sq.pgm");
    let a = json(&["rasterize", "--spec", SQUARE, "--out", pgm.to_str().unwrap(), "--binary"]);
    assert_eq!(a["cells"], 256);
    let b = json(&["rasterize", "--mask", pgm.to_str().unwrap(), "--h", "0.0625"]);
    assert_eq!(b["cells"], 256);
    assert_eq!(b["area"].as_f64().unwrap(), 1.0);
}

#[test]
fn spec_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    fs::write(&path, SQUARE).unwrap();
    let v = json(&["john", "--spec", path.to_str().unwrap()]);
    assert!((v["c_hat"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 0.02);
}

#[test]
fn john_writes_witness_paths() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("paths.csv");
    let v = json(&["john", "--spec", SQUARE, "--paths-csv", csv.to_str().unwrap(), "--max-samples", "8"]);
    assert_eq!(v["samples"], 8);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sample,vertex,x,y,t,rho"));
}

#[test]
fn poincare_and_hardy_report_their_kind() {
    let v = json(&["poincare", "--spec", SQUARE, "--path", "eigen"]);
    assert_eq!(v["kind"], "ascent_estimate");
    assert_eq!(v["b"], 2.0);
    assert_eq!(v["sobolev_triple"], true);
    let v = json(&["poincare", "--spec", SQUARE, "--b", "0", "--path", "eigen"]);
    assert_eq!(v["sobolev_triple"], false);
    let v = json(&["hardy", "--spec", SQUARE, "--p", "2"]);
    assert!(v["value"].as_f64().unwrap() > 0.0);
    let bad = run(&["poincare", "--spec", SQUARE, "--p", "3", "--q", "2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn solve_writes_rasters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let v = json(&[
        "solve", "--spec", SQUARE, "--f", r#"{"pattern":"checkerboard","k":2}"#, "--method", "global", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);
    let n = (v["nx"].as_u64().unwrap() * v["ny"].as_u64().unwrap()) as usize;
    for name in ["v1.f32", "v2.f32"] {
        assert_eq!(fs::metadata(out.join(name)).unwrap().len() as usize, 4 * n);
    }
    assert!(Path::new(&out.join("v1.pgm")).exists());
}

#[test]
fn geometry_commands_run() {
    let v = json(&["components", "--spec", SQUARE, "--w", "0,0", "--d", "0.3", "--b0", "0.6,0.6,0.1"]);
    assert!(v.is_array() || v.is_object());
    let v = json(&["thickness", "--spec", SQUARE, "--lambda", "1", "--w", "0.5,0", "--r", "0.25"]);
    assert!(v["ratio"].as_f64().unwrap() >= 0.5);
    let v = json(&["separation", "--spec", SQUARE, "--cs", "2"]);
    assert_eq!(v["pass"], true);
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    json(&["whitney", "--spec", SQUARE, "--tree", tree.to_str().unwrap()]);
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(tree).unwrap()).unwrap();
    assert!(t["cubes"].as_array().unwrap().len() > 1);
}

#[test]
fn sweep_exit_code_reflects_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    fs::write(&ok, r#"{"seed":1,"domains":[{"family":"square","params":{}}],"resolutions":[0.125],"metrics":[{"metric":"john"}]}"#).unwrap();
    let out = run(&["sweep", "--config", ok.to_str().unwrap(), "--out", dir.path().join("a").to_str().unwrap()]);
    assert!(out.status.success());
    assert!(dir.path().join("a/results.csv").exists());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"domains":[{"family":"power_cusp","params":{"alpha":0.5}}],"resolutions":[0.125],"metrics":[{"metric":"john"}]}"#).unwrap();
    let out = run(&["sweep", "--config", bad.to_str().unwrap(), "--out", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_exits_with_two() {
    let out = run(&["john", "--spec", r#"{"family":"disk","params":{},"h":-1}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
