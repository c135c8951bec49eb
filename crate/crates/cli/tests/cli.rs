use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn networks() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../networks")
}

fn mfgnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfgnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn net(name: &str) -> String {
    networks().join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn per_agent(text: &str) -> f64 {
    let tail = text.split("cost per agent ").nth(1).expect("cost line");
    tail.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn check_accepts_braess() {
    let o = mfgnet(&["check", &net("braess.toml")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ok"));
}

#[test]
fn check_normalizes_shared_boundaries() {
    let o = mfgnet(&["check", &net("two_in_two_out.toml")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ok after boundary normalization"));
}

#[test]
fn check_reports_triangle_witness() {
    let text = fs::read_to_string(networks().join("braess.toml")).unwrap();
    let bad = text.replacen(
        "from = \"a1\"\nto = \"e1\"\ncost = 0.0",
        "from = \"a1\"\nto = \"e1\"\ncost = 10.0",
        1,
    );
    assert_ne!(bad, text);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, bad).unwrap();
    let o = mfgnet(&["check", path.to_str().unwrap(), "--strict-triangle"]);
    assert_eq!(o.status.code(), Some(2));
    let s = stdout(&o);
    assert!(s.contains("triangle inequality fails at `v1`"), "{s}");
    assert!(s.contains("(a1, e2, e1)"), "{s}");
}

#[test]
fn malformed_file_is_an_io_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, "vertices = [\n").unwrap();
    let o = mfgnet(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = mfgnet(&["solve", "/nonexistent/net.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn edge_cost_tabulates_the_quadratic_model() {
    let o = mfgnet(&["edge-cost", &net("models/quadratic.toml"), "--grid", "1,8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "j");
    assert_eq!(&headers[1], "c01");
    let rows: Vec<Vec<f64>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // c = (2|j|)^(1/3) for the quadratic model at alpha = 0
    for row in &rows {
        let expect = (2.0 * row[0]).cbrt();
        assert!((row[1] - expect).abs() < 1e-9 * expect, "{row:?}");
        assert!((row[2] - expect).abs() < 1e-9 * expect, "{row:?}");
    }
}

#[test]
fn edge_cost_builtin_constant() {
    let o = mfgnet(&["edge-cost", "--builtin", "constant:45", "--grid", "0.5:4:3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let n = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(r[1].parse::<f64>().unwrap(), 45.0);
        })
        .count();
    assert_eq!(n, 3);
}

#[test]
fn solve_braess_without_and_with_bridge() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfgnet(&["solve", &net("braess.toml"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((per_agent(&stdout(&o)) - 65.0).abs() < 1e-6);
    for f in ["flow.csv", "currents.csv", "trace.csv", "values.csv", "residuals.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let currents = fs::read_to_string(dir.path().join("currents.csv")).unwrap();
    assert!(currents.starts_with("edge,current"));

    let o = mfgnet(&["solve", &net("braess_bridge.toml")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((per_agent(&stdout(&o)) - 80.0).abs() < 1e-6);
}

#[test]
fn iterative_solver_reports_uncertified_result() {
    let o = mfgnet(&["solve", &net("braess.toml"), "--solver", "iterative", "--max-iter", "0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("NOT certified"));
}

#[test]
fn invalid_tolerance_is_rejected() {
    let o = mfgnet(&["solve", &net("braess.toml"), "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn demo_braess_reports_the_paradox() {
    let o = mfgnet(&["demo-braess"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("from 65.000000 to 80.000000"), "{s}");
    assert!(s.contains("kappa = 2"), "{s}");

    let o = mfgnet(&["demo-braess", "--epsilon", "0.01", "--alpha", "0.75"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("kappa = 3"), "{s}");
    assert!(s.contains("deviation from the ε = 0 cost 80"), "{s}");
}

#[test]
fn transform_writes_directed_network() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfgnet(&[
        "transform",
        &net("braess_bridge.toml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dot = fs::read_to_string(dir.path().join("directed.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dir.path().join("directed.toml").exists());
}

#[test]
fn calibrate_round_trips_through_edge_cost() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = mfgnet(&["calibrate", &net("models/travel_time.toml"), "--out", d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = dir.path().join("calibrated.toml");
    let o = mfgnet(&["edge-cost", model.to_str().unwrap(), "--grid", "0.5,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    for r in rdr.records() {
        let r = r.unwrap();
        let j: f64 = r[0].parse().unwrap();
        let c: f64 = r[1].parse().unwrap();
        let tt: f64 = r[5].parse().unwrap();
        assert!((c - (1.0 + j)).abs() < 1e-8, "{r:?}");
        assert!((tt - c).abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = mfgnet(&[
            "solve",
            &net("two_in_two_out.toml"),
            "--solver",
            "iterative",
            "--seed",
            "11",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(dir.path().join("flow.csv")).unwrap()
    };
    assert_eq!(run(), run());
}
