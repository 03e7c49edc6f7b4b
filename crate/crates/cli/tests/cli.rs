use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn siegel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siegel")).args(args).env_remove("SIEGEL_WORKERS").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"))
}

/// Parses `text` and validates it against the published schema `name`.
fn valid(name: &str, text: &str) -> Value {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path(name)).unwrap()).unwrap();
    let value: Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
    value
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn error_body(out: &Output) -> Value {
    valid("error", &String::from_utf8(out.stderr.clone()).unwrap())["error"].clone()
}

#[test]
fn families_list() {
    let out = siegel(&["families", "list"]);
    assert_eq!(code(&out), 0);
    let v = valid("families", &stdout(&out));
    assert_eq!(v.as_array().unwrap().len(), 6);
    assert_eq!(v[0]["id"], "quadratic");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&siegel(&["families", "list", "--bogus"])), 1);
    assert_eq!(code(&siegel(&["frobnicate"])), 1);
    assert_eq!(code(&siegel(&["yoccoz", "--family", "quadratic"])), 1);
    assert_eq!(code(&siegel(&["--help"])), 0);
}

#[test]
fn yoccoz_small_lambda() {
    let out = siegel(&["yoccoz", "--family", "quadratic", "--lambda", "0.01,0"]);
    assert_eq!(code(&out), 0);
    let v = valid("yoccoz", &stdout(&out));
    let w = (v["w"][0].as_f64().unwrap(), v["w"][1].as_f64().unwrap());
    let ratio = ((w.0 / 0.01 - 0.25).powi(2) + (w.1 / 0.01).powi(2)).sqrt();
    assert!(ratio <= 0.05, "{v}");
    assert!((v["u"].as_f64().unwrap() + 4f64.ln()).abs() <= 0.2);
}

#[test]
fn yoccoz_errors() {
    let out = siegel(&["yoccoz", "--family", "quadratic", "--lambda", "1.5,0"]);
    assert_eq!(code(&out), 2);
    assert_eq!(error_body(&out)["kind"], "precondition");
    let out = siegel(&["yoccoz", "--family", "nonesuch", "--lambda", "0.1,0"]);
    assert_eq!(code(&out), 2);
    let out = siegel(&["yoccoz", "--family", "quadratic", "--lambda", "-0.9,0.3", "--budget", "1"]);
    assert_eq!(code(&out), 3);
    assert_eq!(error_body(&out)["kind"], "no_convergence");
}

#[test]
fn grid_csv_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_siegel"))
            .args(["grid", "--family", "exp", "--rmin", "0.1", "--rmax", "0.9", "--res", "8"])
            .arg("--out")
            .arg(&path)
            .env("SIEGEL_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("3", "b.csv");
    assert_eq!(a, b);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("r,theta,u,iterations,status"));
    assert_eq!(lines.count(), 64);

    let out = siegel(&["grid", "--family", "exp", "--rmin", "0.5", "--rmax", "0.2", "--res", "4"]);
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_siegel"))
        .args(["grid", "--family", "exp", "--rmin", "0.1", "--rmax", "0.2", "--res", "2"])
        .env("SIEGEL_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_selects_json_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"output_format": "json", "default_degree": 64}"#).unwrap();
    let out = siegel(&[
        "grid",
        "--family",
        "quadratic",
        "--rmin",
        "0.2",
        "--rmax",
        "0.4",
        "--res",
        "2",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let rows: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert_eq!(rows[0]["status"], "ok");

    std::fs::write(&cfg, r#"{"unknown_key": 1}"#).unwrap();
    let out = siegel(&["families", "list", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn radius_golden_and_rationals() {
    let out = siegel(&["radius", "--family", "quadratic", "--alpha", "golden", "--method", "radial", "--depth", "10"]);
    assert_eq!(code(&out), 0);
    let v = valid("radius_estimate", &stdout(&out));
    let rho = v["rho_hat"].as_f64().unwrap();
    assert!(rho < 4f64.ln() + 0.25f64.ln() + 0.1);

    let out = siegel(&["radius", "--family", "quadratic", "--alpha", "rat:1/2", "--method", "coeff"]);
    assert_eq!(code(&out), 3);
    let e = error_body(&out);
    assert_eq!(e["kind"], "small_divisor_breakdown");
    assert_eq!(e["k"], 3);

    let out = siegel(&["radius", "--family", "quadratic", "--alpha", "rat:1/2", "--method", "radial", "--depth", "12"]);
    assert_eq!(code(&out), 0);
    let v = valid("radius_estimate", &stdout(&out));
    assert_eq!(v["rho_hat"], "-inf");
    assert_eq!(v["diverging_to_minus_infinity"], true);

    let out = siegel(&["radius", "--family", "quadratic", "--alpha", "cf:1,0", "--method", "radial"]);
    assert_eq!(code(&out), 2);
    let out = siegel(&["radius", "--family", "quadratic", "--alpha", "golden", "--method", "guess"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn poisson_check() {
    let out = siegel(&[
        "poisson-check",
        "--family",
        "quadratic",
        "--alpha",
        "golden",
        "--delta",
        "0.01",
        "--L",
        "-1.0",
        "--R",
        "-1.0",
        "--samples",
        "8",
    ]);
    assert_eq!(code(&out), 0);
    let v = valid("poisson_report", &stdout(&out));
    assert_eq!(v["L"], -1.0);
    assert_eq!(v["caps_scanned"], false);
    assert_eq!(v["samples"].as_array().unwrap().len(), 8);

    let out = siegel(&[
        "poisson-check",
        "--family",
        "quadratic",
        "--alpha",
        "golden",
        "--delta",
        "0.7",
        "--L",
        "0",
        "--R",
        "0",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn norm_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    // w^2 padded to degree 8
    let mut c = vec![[0.0, 0.0]; 9];
    c[2] = [1.0, 0.0];
    std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    let out = siegel(&["norm", "--series", p, "--r", "1", "--K", "4"]);
    assert_eq!(code(&out), 0);
    let v = valid("norm_result", &stdout(&out));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["K"], 4);

    assert_eq!(code(&siegel(&["norm", "--series", p, "--r", "1", "--K", "9"])), 2);
    assert_eq!(code(&siegel(&["norm", "--series", "/nonexistent.json", "--r", "1"])), 2);

    std::fs::write(&path, serde_json::to_string(&vec![[1.0, 0.0]; 17]).unwrap()).unwrap();
    let out = siegel(&["norm", "--series", p, "--r", "0.999", "--K", "4"]);
    assert_eq!(code(&out), 3);
    assert_eq!(error_body(&out)["kind"], "unreliable_radius");
}

#[test]
fn construct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out_arg = path.to_str().unwrap();

    let out = siegel(&[
        "construct",
        "--family",
        "quadratic",
        "--alpha0",
        "golden",
        "--eps0",
        "0.05",
        "--rho-inf",
        "-1.3",
        "--depth",
        "0",
        "--out",
        out_arg,
    ]);
    assert_eq!(code(&out), 0);
    let v = valid("construction_report", &std::fs::read_to_string(&path).unwrap());
    assert_eq!(v["depth"], 0);
    assert!(v["steps"].as_array().unwrap().is_empty());

    // rho_inf above rho(alpha0)
    let out = siegel(&[
        "construct",
        "--family",
        "quadratic",
        "--alpha0",
        "golden",
        "--eps0",
        "0.05",
        "--rho-inf",
        "0.5",
        "--depth",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    let out = siegel(&[
        "construct",
        "--family",
        "quadratic",
        "--alpha0",
        "golden",
        "--eps0",
        "0.05",
        "--rho-inf",
        "-1.4",
        "--depth",
        "2",
        "--schedule",
        "-1.3,-1.2",
    ]);
    assert_eq!(code(&out), 2);

    // norm gate unreachable at this depth in double precision: stall, partial trace kept
    let out = siegel(&[
        "construct",
        "--family",
        "quadratic",
        "--alpha0",
        "golden",
        "--eps0",
        "0.05",
        "--rho-inf",
        "-1.42",
        "--depth",
        "1",
        "--out",
        out_arg,
    ]);
    match code(&out) {
        0 => {
            valid("construction_report", &std::fs::read_to_string(&path).unwrap());
        }
        3 => {
            assert_eq!(error_body(&out)["kind"], "construction_stalled");
            let v = valid("construction_report", &std::fs::read_to_string(&path).unwrap());
            assert!(!v["attempts"].as_array().unwrap().is_empty());
        }
        c => panic!("unexpected exit {c}"),
    }
}

#[test]
fn boundary_curve() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = siegel(&[
        "boundary",
        "--family",
        "quadratic",
        "--alpha",
        "golden",
        "--rho",
        "-1.3",
        "--samples",
        "32",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = valid("boundary_summary", &stdout(&out));
    assert_eq!(v["self_intersections"], 0);
    assert!(v["gprime_min_disc"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("theta,re,im,abs_gprime"));
    assert_eq!(lines.count(), 33);

    let out = siegel(&["boundary", "--family", "quadratic", "--alpha", "golden", "--rho", "0.5", "--samples", "32"]);
    assert_eq!(code(&out), 3);
    assert_eq!(error_body(&out)["kind"], "unreliable_radius");
    let out = siegel(&["boundary", "--family", "quadratic", "--alpha", "golden", "--rho", "-1.3", "--samples", "2"]);
    assert_eq!(code(&out), 2);
}
