use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fiber-atlas"));
    c.env_remove("FIBER_ATLAS_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn write_circle(path: &Path, n: usize) {
    let mut s = String::from("x,y\n");
    for i in 0..n {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        s += &format!("{},{}\n", t.cos(), t.sin());
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn betti_of_a_circle() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("circle.csv");
    write_circle(&csv, 200);
    let o = run(&["betti", "--in", csv.to_str().unwrap(), "--eps", "auto"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = stdout_json(&o);
    assert_eq!(rep["result"]["homology"]["beta0"], 1);
    assert_eq!(rep["result"]["homology"]["beta1"], 1);
    assert_eq!(rep["tool_version"], env!("CARGO_PKG_VERSION"));

    // a tiny fixed scale leaves every point isolated
    let o = run(&["betti", "--in", csv.to_str().unwrap(), "--eps", "0.001"]);
    assert_eq!(stdout_json(&o)["result"]["homology"]["beta0"], 200);
}

#[test]
fn betti_writes_persistence_pairs_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("circle.csv");
    write_circle(&csv, 100);
    let out = dir.path().join("out");
    let o = run(&["betti", "--in", csv.to_str().unwrap(), "--out", out.to_str().unwrap(), "--emit-persistence"]);
    assert!(o.status.success());
    let line: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((line["beta0"].as_u64(), line["beta1"].as_u64()), (Some(1), Some(1)));
    let pairs = std::fs::read_to_string(out.join("persistence.csv")).unwrap();
    assert!(pairs.starts_with("dim,birth,death"));
    assert!(out.join("report.json").exists() && out.join("timing.json").exists());
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(!report.contains("wall"));
}

#[test]
fn scan_arc_finds_the_jump_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    let o = run(&[
        "scan-arc", "--seed", "11", "--vars", "x,y", "--map", "x*(x*y-1)", "--from", "0", "--to", "1", "--steps",
        "10", "--radius", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["verdict"], "ATYPICAL");
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let jumps = rep["result"]["scan"]["jumps"].as_array().unwrap();
    assert_eq!(jumps.len(), 1);
    assert_eq!(jumps[0]["invariant"], "beta0");
    assert_eq!(jumps[0]["s_to"], 0.0);
    assert_eq!(rep["seed"], 11);
    assert_eq!(rep["config"]["map"]["components"][0], "x*(x*y-1)");
    assert!(out.join("fiber_010.csv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 3\n\n[map]\nvariables = [\"x\", \"y\"]\ncomponents = [\"x^2+y^2\"]\n\n[sample]\ntarget = [1.0]\nradius = 2.0\ncount = 50\n",
    )
    .unwrap();
    let o = run(&["fiber-sample", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = stdout_json(&o);
    assert_eq!(rep["seed"], 9);
    assert_eq!(rep["result"]["seed"], 9);
    assert_eq!(rep["config"]["sample"]["radius"], 2.0);
    let pts = rep["result"]["points"].as_array().unwrap();
    assert!(!pts.is_empty() && pts.len() <= 50);

    std::fs::write(&cfg, "seed = 3\nradius = 4.0\n").unwrap();
    let o = run(&["fiber-sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_error(&o)["message"].as_str().unwrap().contains("radius"));
}

#[test]
fn reports_match_across_thread_counts() {
    let args = ["fiber-sample", "--seed", "4", "--vars", "x,y,z", "--map", "x^2+y^2+z^2", "--target", "1", "--count", "400"];
    let one = bin().args(args).env("FIBER_ATLAS_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("FIBER_ATLAS_THREADS", "4").output().unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn errors_are_json_with_distinct_codes() {
    let o = run(&["scan-arc", "--vars", "x,y", "--map", "x*y", "--from", "0", "--to", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_error(&o);
    assert_eq!(e["error"], "usage");
    assert!(e["message"].as_str().unwrap().contains("seed"));

    let o = run(&["fiber-sample", "--seed", "1", "--vars", "x,y", "--map", "x^2+", "--target", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_error(&o)["error"], "input");

    let o = run(&["fiber-sample", "--seed", "1", "--vars", "x,y", "--map", "x^2+y^2", "--target", "1", "--radius", "-1"]);
    assert_eq!(o.status.code(), Some(2));

    // the circle x^2+y^2 = -1 has no real points
    let o = run(&["fiber-sample", "--seed", "1", "--vars", "x,y", "--map", "x^2+y^2", "--target", "-1", "--radius", "2"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_error(&o)["error"], "computation");

    let o = run(&["nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_error(&o)["error"], "usage");

    let o = bin().args(["betti", "--in", "x.csv"]).env("FIBER_ATLAS_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    assert!(run(&["--help"]).status.success());
}

#[test]
fn critical_points_on_a_circle() {
    let o = run(&[
        "critical-points", "--seed", "2", "--vars", "x,y", "--objective", "x", "--equality", "x^2+y^2-1", "--lo",
        "-2,-2", "--hi", "2,2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = stdout_json(&o);
    let mut xs: Vec<(f64, u64)> = rep["result"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["location"][0].as_f64().unwrap(), p["morse_index"].as_u64().unwrap()))
        .collect();
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(xs.len(), 2);
    assert!((xs[0].0 + 1.0).abs() < 1e-8 && xs[0].1 == 0);
    assert!((xs[1].0 - 1.0).abs() < 1e-8 && xs[1].1 == 1);
}

#[test]
fn verify_example_with_seed_seven() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex");
    let o = run(&["verify-example", "--seed", "7", "--out", out.to_str().unwrap()]);
    let line: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(o.status.code(), Some(0), "{line}");
    assert_eq!(line["verdict"], "ATYPICAL");
    assert_eq!(line["homology_constant"], true);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["result"]["overall"], "pass");
    assert_eq!(rep["resolved"]["seed"], 7);
    assert!(out.join("fiber_000.csv").exists());
}
