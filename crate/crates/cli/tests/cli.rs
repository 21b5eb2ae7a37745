use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
use std::path::Path;
use std::process::{Command, Output};

use nrflat::io::{to_deterministic_json, MatrixFile};
use nrflat::linalg::ComplexSquareMatrix;
use nrflat::verify::reference_matrix;
use serde_json::Value;

fn nrflat(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrflat"))
        .args(args)
        .current_dir(dir)
        .env("NR_THREADS", "2")
        .output()
        .expect("spawn nrflat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_matrix(dir: &Path, name: &str, a: &ComplexSquareMatrix<f64>) {
    let text = to_deterministic_json(&MatrixFile::from_matrix(a)).unwrap();
    std::fs::write(dir.join(name), text).unwrap();
}

fn field(out: &str, key: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with(&format!("{key}="))).unwrap_or_else(|| panic!("{key} missing:\n{out}"));
    line[key.len() + 1..].parse().unwrap()
}

#[test]
fn analyze_reference_matrix() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(dir.path(), "ref.json", &reference_matrix());
    let o = nrflat(&["analyze", "ref.json", "--out-json", "r.json", "--out-csv", "b.csv", "--out-svg", "b.svg"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let flats = report["flats"].as_array().unwrap();
    assert_eq!(flats.len(), 2);
    let expected = 2.0 * 55f64.sqrt() / 19.0;
    for f in flats {
        assert!((f["length"].as_f64().unwrap() - expected).abs() < 1e-6);
        assert!((f["distance"].as_f64().unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-8);
    }
    assert!((report["symmetry"]["axis_angle"].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-8);
    assert_eq!(report["cross_check"]["matched"], Value::Bool(true));

    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("phi,support,x,y,gap\n"));
    assert_eq!(csv.lines().count(), 2049);
    assert!(std::fs::read_to_string(dir.path().join("b.svg")).unwrap().contains("<svg"));
}

#[test]
fn analyze_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(dir.path(), "ref.json", &reference_matrix());
    for name in ["a.json", "b.json"] {
        let o = nrflat(&["analyze", "ref.json", "--out-json", name, "--out-csv", &format!("{name}.csv")], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.json.csv"), read("b.json.csv"));
}

#[test]
fn analyze_matrices_without_flats() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(dir.path(), "zero.json", &ComplexSquareMatrix::zeros(4));
    write_matrix(dir.path(), "j4.json", &ComplexSquareMatrix::jordan_block(4));
    for name in ["zero.json", "j4.json"] {
        let o = nrflat(&["analyze", name, "--out-json", "r.json"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(report["flats"].as_array().unwrap().len(), 0, "{name}");
    }
    let o = nrflat(&["boundary", "j4.json", "--n", "256"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = (std::f64::consts::PI / 5.0).cos();
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[1] - r).abs() < 1e-12 && (v[2].hypot(v[3]) - r).abs() < 1e-12);
    }
}

#[test]
fn invalid_input_exits_2_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ragged.json"), "{\"dim\": 2, \"re\": [[0,1],[0]], \"im\": [[0,0],[0,0]]}").unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"dim\": 2,\n\"re\": [[0,1],[0,0]],\n\"im\": nope}").unwrap();
    std::fs::write(dir.path().join("nan.json"), "{\"dim\": 1, \"re\": [[1e999]], \"im\": [[0]]}").unwrap();

    let o = nrflat(&["analyze", "ragged.json", "--out-json", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 1"), "{}", stderr(&o));
    assert!(!dir.path().join("r.json").exists());

    let o = nrflat(&["analyze", "broken.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    assert_eq!(nrflat(&["analyze", "nan.json"], dir.path()).status.code(), Some(2));
    assert_eq!(nrflat(&["analyze", "absent.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn family_maximal_member() {
    let dir = tempfile::tempdir().unwrap();
    let theta = (2.0 * FRAC_PI_3).to_string();
    let o = nrflat(&["family", "--d", "1", "--theta", &theta, "--maximal", "--out-matrix", "m.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((field(&stdout(&o), "L") - 1.0).abs() < 1e-12);

    let o = nrflat(&["analyze", "m.json", "--out-json", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for f in report["flats"].as_array().unwrap() {
        assert!((f["length"].as_f64().unwrap() - 1.0).abs() < 1e-7);
    }
}

#[test]
fn family_degrees_and_k_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = nrflat(&["family", "--d", "1", "--theta", "120", "--degrees", "--maximal"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!((field(&stdout(&o), "angle") - 2.0 * FRAC_PI_3).abs() < 1e-12);

    let k = (1.0 - 3f64.sqrt() / 2.0).sqrt().to_string();
    let o = nrflat(&["family", "--k", &k], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!((field(&stdout(&o), "angle") - std::f64::consts::PI / 6.0).abs() < 1e-12);
}

#[test]
fn family_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = nrflat(&["family", "--d", "1", "--theta", "1", "--x", "2.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(0, 2d)"), "{}", stderr(&o));

    let o = nrflat(&["family", "--d", "1", "--theta", "1", "--x", "1", "--y", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("y"), "{}", stderr(&o));

    let o = nrflat(&["family", "--k", "0.5", "--maximal", "--d", "1", "--theta", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(nrflat(&["family", "--k", "2"], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_random_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = nrflat(&["verify", "--suite", "random", "--samples", "50", "--seed", "7", "--out-json", "v.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.contains("PASS")).count(), 3);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    let ids: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [2, 7, 8]);
}

#[test]
fn bad_thread_setting_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nrflat"))
        .args(["family", "--d", "1", "--theta", "1", "--maximal"])
        .current_dir(dir.path())
        .env("NR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
