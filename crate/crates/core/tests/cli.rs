use std::path::Path;
use std::process::{Command, Output};

fn elrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elrc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_complete_graph() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "k5.txt", "5\n1: 2 3 4 5\n2: 1 3 4 5\n3: 1 2 4 5\n4: 1 2 3 5\n5: 1 2 3 4\n");
    let o = elrc(&["graph", "check", "--file", &p, "--r", "3", "--byzantine", "1,5", "--f", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "r-robust: true\nf-local: true\n");
    let o = elrc(&["graph", "check", "--file", &p, "--r", "4"]);
    assert_eq!(stdout(&o), "r-robust: false\n");
    let o = elrc(&["graph", "maxr", "--file", &p]);
    assert_eq!(stdout(&o), "3\n");
}

#[test]
fn generate_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.txt");
    let p = p.to_str().unwrap();
    let o = elrc(&["graph", "generate", "--n", "8", "--r", "3", "--seed", "42", "--out", p]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = elrc(&["graph", "check", "--file", p, "--r", "3"]);
    assert_eq!(stdout(&o), "r-robust: true\n");

    let text = std::fs::read_to_string(p).unwrap();
    let g: elrc::Digraph = text.parse().unwrap();
    assert_eq!(g, elrc::graph::generate_r_robust_digraph(8, 3, 42).unwrap());
    assert_eq!(g.to_string(), text);
}

#[test]
fn infeasible_generation_exits_2() {
    let o = elrc(&["graph", "generate", "--n", "4", "--r", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ceiling is 2"), "{}", stderr(&o));
}

#[test]
fn missing_graph_file_exits_4() {
    let o = elrc(&["graph", "maxr", "--file", "/nonexistent/graph.txt"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn malformed_scenario_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = elrc::scenario::bundled("paper_scenario_A").unwrap().replace("mu2 = 2.0", "mu2 = two");
    let line = text.lines().position(|l| l.starts_with("mu2")).unwrap() + 1;
    let p = write(dir.path(), "bad.toml", &text);
    let out = dir.path().join("out");
    let o = elrc(&["run", "--scenario", &p, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("line {line}")), "{}", stderr(&o));
}

#[test]
fn short_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = elrc(&["run", "--scenario", "paper_scenario_C", "--out", out.to_str().unwrap(), "--horizon", "0.2", "--decimation", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,agent,q1,q2,dq1,dq2,eta1,eta2,W1,W2"));
    assert_eq!(lines.next().unwrap().split(',').count(), 10);
    assert_eq!(traj.lines().count(), 1 + 21 * 8);
    let trig = std::fs::read_to_string(out.join("triggers.csv")).unwrap();
    assert!(trig.starts_with("agent,t\n"));
    assert!(out.join("messages.csv").exists());
    let report = std::fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(report.contains("overrides: horizon = 0.2, decimation = 100"), "{report}");
}

#[test]
fn resilient_run_settles_and_unprotected_run_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    let o = elrc(&["run", "--scenario", "paper_scenario_C", "--out", c.to_str().unwrap(), "--decimation", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(c.join("metrics.txt")).unwrap();
    assert!(report.contains("consensus: settled"), "{report}");
    assert!(report.contains("settling") && report.contains("triggers"));

    let b = dir.path().join("b");
    let o = elrc(&["run", "--scenario", "paper_scenario_B", "--out", b.to_str().unwrap(), "--f", "0", "--decimation", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(b.join("metrics.txt")).unwrap();
    assert!(report.contains("NOT CONVERGED"), "{report}");
    assert!(report.contains("undefined"));
    assert!(report.contains("f = 0"));
}

#[test]
fn invalid_numerics_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = elrc(&["run", "--scenario", "paper_scenario_A", "--out", out.to_str().unwrap(), "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
