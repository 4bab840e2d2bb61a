use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use potkit::certificates::eval_cond4;
use potkit::classify::classify;
use potkit::io::{parse_matrix, read_matrix_file};
use potkit::Matrix;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn potkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_potkit"))
        .args(args)
        .env_remove("PK_SEED")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = potkit(&all);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    });
    (out.status.code().unwrap(), v)
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn classify_example() {
    let (code, v) = json(&["classify", &path("nondouble_potential.txt")]);
    assert_eq!(code, 0);
    let body = &v["body"];
    assert_eq!(body["kind"], "classification");
    assert_eq!(body["potential"], true);
    assert_eq!(body["inverse_m_matrix"], true);
    assert_eq!(body["double_potential"], false);
}

#[test]
fn classify_identity_sets_every_flag() {
    let (_, v) = json(&["classify", &path("identity.txt")]);
    for key in ["nonnegative", "symmetric", "nonsingular", "inverse_m_matrix", "potential", "double_potential"] {
        assert_eq!(v["body"][key], true, "{key}");
    }
}

#[test]
fn malformed_input_exits_2() {
    let out = potkit(&["classify", &path("malformed.txt")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    assert_eq!(potkit(&["classify", "/nonexistent/file.txt"]).status.code(), Some(2));
    assert_eq!(potkit(&["bogus"]).status.code(), Some(2));
    assert_eq!(potkit(&["--help"]).status.code(), Some(0));
}

#[test]
fn certify_cond4_on_example_fails_with_witness() {
    let (code, v) = json(&["certify", &path("nondouble_potential.txt"), "--cond", "4"]);
    assert_eq!(code, 1);
    assert_eq!(v["exit_code"], 1);
    let w = &v["body"]["witness"];
    let x: Vec<f64> = serde_json::from_value(w["x"].clone()).unwrap();
    let u = read_matrix_file(fixture("nondouble_potential.txt")).unwrap();
    let value = eval_cond4(&u, &x).unwrap();
    assert!(value < 0.0);
    assert_eq!(w["value"].as_f64().unwrap(), value);
}

#[test]
fn certify_holds_cases() {
    assert_eq!(potkit(&["certify", &path("identity.txt"), "--cond", "4"]).status.code(), Some(0));
    assert_eq!(potkit(&["certify", &path("nondouble_potential.txt"), "--cond", "6"]).status.code(), Some(0));
    assert_eq!(potkit(&["certify", &path("nondouble_potential.txt"), "--cond", "5"]).status.code(), Some(0));
}

#[test]
fn falsify_exit_codes() {
    assert_eq!(potkit(&["falsify", &path("nondouble_potential.txt"), "--cond", "4"]).status.code(), Some(1));
    let out = potkit(&["--budget", "500", "falsify", &path("identity.txt"), "--cond", "4"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn principles_on_transposed_example() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.txt");
    std::fs::write(&t, "2\n2 1\n100 100\n").unwrap();
    let t = t.display().to_string();
    assert_eq!(potkit(&["principles", &t, "--principle", "cmp"]).status.code(), Some(1));
    assert_eq!(potkit(&["principles", &t, "--principle", "dp"]).status.code(), Some(0));
    assert_eq!(potkit(&["principles", &path("ones.txt"), "--principle", "cmp"]).status.code(), Some(0));
    assert_eq!(potkit(&["principles", &path("ones.txt"), "--principle", "bridge"]).status.code(), Some(0));
}

#[test]
fn scale_ue_has_unit_column_sums() {
    let out = potkit(&["scale", &path("nondouble_potential.txt"), "--mode", "ue"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# E ="));
    let m = parse_matrix(&text).unwrap();
    for s in m.col_sums() {
        assert!((s - 1.0).abs() < 1e-12);
    }
    assert!(classify(&m, 1e-9).double_potential);
}

#[test]
fn scale_due_of_identity_is_identity_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("due.txt");
    let out = potkit(&["scale", &path("identity.txt"), "--mode", "due", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_matrix_file(&out_path).unwrap(), Matrix::identity(3));
    assert_eq!(potkit(&["scale", &path("zero_column.txt"), "--mode", "ue"]).status.code(), Some(2));
}

#[test]
fn generate_is_deterministic_and_meets_its_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = potkit(&["--seed", "7", "generate", "--class", "potential", "--n", "4", "--count", "10", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let mut files: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 10);
    assert!(files[0].file_name().unwrap().to_str().unwrap().starts_with("potential_n4_seed"));
    for f in &files {
        assert!(classify(&read_matrix_file(f).unwrap(), 1e-9).potential, "{}", f.display());
    }
    let a = potkit(&["--seed", "7", "generate", "--class", "double_potential", "--n", "5"]);
    let b = potkit(&["--seed", "7", "generate", "--class", "double-potential", "--n", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
    assert_eq!(potkit(&["generate", "--class", "potential", "--n", "0"]).status.code(), Some(2));
    assert_eq!(potkit(&["generate", "--class", "nope", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_potkit"))
            .args(["--json", "generate", "--class", "potential", "--n", "3"])
            .env("PK_SEED", seed)
            .output()
            .unwrap()
    };
    let v: Value = serde_json::from_slice(&run("42").stdout).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["body"]["specs"][0]["seed"], 42);
    assert_ne!(run("42").stdout.len(), 0);
}

#[test]
fn json_report_has_the_envelope() {
    let (_, v) = json(&["principles", &path("nondouble_potential.txt"), "--principle", "bridge"]);
    assert_eq!(v["tool"], "potkit");
    assert_eq!(v["body"]["kind"], "bridge");
    assert!(v["wall_clock_ms"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["settings"]["nmax"], 12);
}
