use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_touchdown"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv(path: PathBuf) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

/// Reference config with some lines replaced or appended.
fn variant(dir: &Path, edits: &[(&str, &str)], extra: &str) -> PathBuf {
    let mut text = fs::read_to_string(config("reference.ini")).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from));
        text = text.replace(from, to);
    }
    text.push_str(extra);
    let path = dir.join("variant.ini");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["validate"], &config("reference.ini"), tmp.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("all hypotheses hold"));

    let p1 = variant(tmp.path(), &[("p = 2", "p = 1")], "");
    let o = run(&["validate"], &p1, tmp.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("A2 asymptotic FAIL"));

    let bad = tmp.path().join("bad.ini");
    fs::write(&bad, "[model]\nalpha = 2\nbeta zero\n").unwrap();
    let o = run(&["validate"], &bad, tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = run(&["validate"], &tmp.path().join("missing.ini"), tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("reference.ini");

    let o = run(&["solve", "--lambda", "0"], &cfg, &tmp.path().join("zero"));
    assert_eq!(code(&o), 0);
    let rows = csv(tmp.path().join("zero/solution.csv"));
    assert_eq!(rows[0], ["r", "u"]);
    assert_eq!(rows.len(), 2050);
    assert!(rows[1..]
        .iter()
        .all(|r| r[1].parse::<f64>().unwrap() == 0.0));

    let o = run(
        &["solve", "--lambda", "0.1", "--svg"],
        &cfg,
        &tmp.path().join("small"),
    );
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("small/solve.json"));
    assert_eq!(rep["report"]["status"], "Converged");
    assert!(rep["report"]["residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(rep["config"]["model"]["operator"]["alpha"], 2.0);
    assert!(fs::read_to_string(tmp.path().join("small/solution.svg"))
        .unwrap()
        .starts_with("<svg"));

    let o = run(&["solve", "--lambda", "100"], &cfg, &tmp.path().join("big"));
    assert_eq!(code(&o), 1);
    let rep = json(tmp.path().join("big/solve.json"));
    assert_eq!(rep["report"]["status"], "TouchdownDetected");

    let o = run(&["solve", "--lambda", "-1"], &cfg, &tmp.path().join("neg"));
    assert_eq!(code(&o), 2);
}

#[test]
fn pullin_bounds_and_bracket() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["pullin"], &config("reference.ini"), tmp.path());
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("pullin.json"));
    let lower = rep["lower"].as_f64().unwrap();
    let upper = rep["upper"].as_f64().unwrap();
    assert!((lower - 25.0 / 36.0).abs() < 1e-12);
    assert!((upper - 48.0).abs() < 1e-12);
    let lo = rep["bracket"][0].as_f64().unwrap();
    let hi = rep["bracket"][1].as_f64().unwrap();
    assert!(lower < lo && lo < hi && hi < upper);
    assert!(hi - lo <= 1e-3);
    let trace = csv(tmp.path().join("pullin_trace.csv"));
    assert_eq!(trace[0], ["lambda", "classification", "iterations", "u0"]);
    assert!(trace.len() > 2);

    // a width wider than the bounds leaves the bracket at the bounds
    let o = run(
        &["pullin", "--width", "100"],
        &config("reference.ini"),
        &tmp.path().join("wide"),
    );
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("wide/pullin.json"));
    assert_eq!(rep["bracket"][0], rep["lower"]);
    assert_eq!(rep["bracket"][1], rep["upper"]);
    assert_eq!(rep["evaluations"], 0);
}

#[test]
fn pullin_runs_for_sphere_cap() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &["pullin", "--width", "1e-2"],
        &config("sphere_cap.ini"),
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("pullin.json"));
    assert!(rep["bracket"][0].as_f64().unwrap() >= rep["lower"].as_f64().unwrap());
}

#[test]
fn branch_sweeps() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("reference.ini");
    let o = run(
        &["branch", "--jobs", "4", "--svg"],
        &cfg,
        &tmp.path().join("full"),
    );
    assert_eq!(code(&o), 0);
    let rows = csv(tmp.path().join("full/branch.csv"));
    assert_eq!(
        rows[0],
        ["lambda", "u0", "norm_sup", "status", "iterations"]
    );
    assert_eq!(rows.len(), 33);
    let u0: Vec<f64> = rows[1..]
        .iter()
        .filter(|r| r[3] == "Converged")
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(u0.len() >= 31);
    assert!(u0.windows(2).all(|w| w[0] < w[1]));
    assert!(tmp.path().join("full/branch.svg").exists());

    let o = run(
        &["branch", "--points", "0"],
        &cfg,
        &tmp.path().join("empty"),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(tmp.path().join("empty/branch.csv")).unwrap(),
        "lambda,u0,norm_sup,status,iterations\n"
    );

    let o = run(
        &["branch", "--lambda", "2", "--points", "8"],
        &cfg,
        &tmp.path().join("past"),
    );
    assert_eq!(code(&o), 0);
    let status: Vec<String> = csv(tmp.path().join("past/branch.csv"))[1..]
        .iter()
        .map(|r| r[3].clone())
        .collect();
    let first_td = status
        .iter()
        .position(|s| s == "TouchdownDetected")
        .unwrap();
    assert!(status[first_td..].iter().all(|s| s == "TouchdownDetected"));
    assert!(first_td > 0);
}

#[test]
fn shoot_reference() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["shoot", "--svg"], &config("reference.ini"), tmp.path());
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("shoot.json"));
    let k = &rep["constants"];
    assert_eq!(k["theta"], 2.0);
    assert!((k["sigma"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((k["kappa"].as_f64().unwrap() - 0.93217).abs() < 1e-5);
    assert!((rep["lambda_star"].as_f64().unwrap() - 10.0 / 9.0).abs() < 1e-8);
    assert!(rep["fit"]["exponent_rel_err"].as_f64().unwrap() < 0.02);
    let traj = csv(tmp.path().join("trajectory.csv"));
    assert_eq!(traj[0], ["t", "v", "w"]);
    let prof = csv(tmp.path().join("touchdown.csv"));
    assert_eq!(prof.len(), 2050);
    assert!(tmp.path().join("shoot.svg").exists());
}

#[test]
fn shoot_rejects_sphere_cap() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["shoot"], &config("sphere_cap.ini"), tmp.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn asymptotics_fit() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["asymptotics"], &config("k_hessian.ini"), tmp.path());
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("asymptotics.json"));
    assert!(rep["fit"]["exponent_rel_err"].as_f64().unwrap() < 0.02);
    assert!(rep["fit"]["coef_rel_err"].as_f64().unwrap() < 0.05);
    let svg = fs::read_to_string(tmp.path().join("asymptotics.svg")).unwrap();
    assert!(svg.contains("1e-4"));
}

#[test]
fn crosscheck_thresholds() {
    let tmp = TempDir::new().unwrap();
    let o = run(
        &["crosscheck"],
        &config("laplace_10d.ini"),
        &tmp.path().join("ten"),
    );
    assert_eq!(code(&o), 0);
    let rep = json(tmp.path().join("ten/crosscheck.json"));
    assert_eq!(rep["pass"], true);
    assert!(rep["discrepancy"].as_f64().unwrap() < 0.02);

    let coarse = variant(tmp.path(), &[("M = 2048", "M = 64")], "");
    let o = run(&["crosscheck"], &coarse, &tmp.path().join("coarse"));
    assert_eq!(code(&o), 1);
    let rep = json(tmp.path().join("coarse/crosscheck.json"));
    assert_eq!(rep["pass"], false);
    assert_eq!(rep["config"]["numerics"]["M"], 64);

    let o = run(
        &["crosscheck", "--threshold", "100%"],
        &coarse,
        &tmp.path().join("loose"),
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = config("reference.ini");
    for dir in ["a", "b"] {
        let o = run(
            &["branch", "--lambda", "1.2", "--points", "6", "--jobs", "3"],
            &cfg,
            &tmp.path().join(dir),
        );
        assert_eq!(code(&o), 0);
        let o = run(&["pullin", "--width", "1e-2"], &cfg, &tmp.path().join(dir));
        assert_eq!(code(&o), 0);
    }
    for file in ["branch.csv", "pullin.json", "pullin_trace.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(file)).unwrap(),
            fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
}
