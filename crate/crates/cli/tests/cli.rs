use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

use ncgk::format::{to_json_string, TensorFile};
use ncgk::linalg::svd;
use ncgk::{c64, CMatrix, Field, RMatrix, Tensor4, C64};

fn ncgk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncgk")).args(args).output().unwrap()
}

fn write_tensor(dir: &TempDir, name: &str, m: &Tensor4) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, to_json_string(&TensorFile::from(m)).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn random_tensor(seed: u64, n: usize) -> Tensor4 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<C64> = (0..n.pow(4)).map(|_| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    Tensor4::from_dense(n, Field::Complex, &data).unwrap()
}

fn random_orthogonal(r: &mut ChaCha8Rng, n: usize) -> RMatrix {
    let q = svd(&CMatrix::from_fn(n, n, |_, _| c64(r.random_range(-1.0..1.0), 0.0))).unitary();
    RMatrix::from_fn(n, n, |i, j| q[(i, j)].re)
}

fn scale_numbers(v: &mut Value, f: f64) {
    match v {
        Value::Number(x) => *v = Value::from(x.as_f64().unwrap() * f),
        Value::Array(xs) => xs.iter_mut().for_each(|x| scale_numbers(x, f)),
        _ => {}
    }
}

#[test]
fn scalar_tensor_is_solved_exactly() {
    let dir = TempDir::new().unwrap();
    let m = Tensor4::new(1, Field::Complex, [([0, 0, 0, 0], c64(3.0, -4.0))]).unwrap();
    let tensor = write_tensor(&dir, "m.json", &m);
    let out = dir.path().join("r.json");
    assert!(ncgk(&["solve", "--tensor", s(&tensor), "--mode", "complex", "--out", s(&out)]).status.success());
    let r = read_json(&out);
    let (value, ub) = (r["value"].as_f64().unwrap(), r["upper_bound"].as_f64().unwrap());
    assert!((value - 5.0).abs() < 1e-9 && (value - ub).abs() < 1e-6 * ub, "{value} {ub}");
}

#[test]
fn verify_accepts_solutions_and_rejects_tampering() {
    let dir = TempDir::new().unwrap();
    let tensor = write_tensor(&dir, "m.json", &random_tensor(1, 3));
    let csv = dir.path().join("trials.csv");
    for mode in ["complex", "real", "nc"] {
        let out = dir.path().join(format!("{mode}.json"));
        let m = if mode == "real" {
            write_tensor(&dir, "haagerup.json", &Tensor4::haagerup(2))
        } else {
            tensor.clone()
        };
        let args = ["solve", "--tensor", s(&m), "--mode", mode, "--trials", "32", "--out", s(&out), "--emit-csv", s(&csv)];
        assert!(ncgk(&args).status.success(), "{mode}");
        let check = ncgk(&["verify", "--result", s(&out), "--tensor", s(&m)]);
        assert!(check.status.success(), "{mode}: {}", String::from_utf8_lossy(&check.stderr));
        let report: Value = serde_json::from_slice(&check.stdout).unwrap();
        assert_eq!(report["ok"], Value::Bool(true));
    }
    let trials = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(trials.lines().next(), Some("trial,value,best"));
    assert_eq!(trials.lines().count(), 33);

    let path = dir.path().join("complex.json");
    let mut r = read_json(&path);
    scale_numbers(&mut r["A"], 1.5);
    std::fs::write(&path, r.to_string()).unwrap();
    assert_eq!(ncgk(&["verify", "--result", s(&path)]).status.code(), Some(1));
}

#[test]
fn decomposing_a_rank_one_tensor_gives_one_term() {
    let dir = TempDir::new().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let u = |r: &mut ChaCha8Rng| {
        svd(&CMatrix::from_fn(2, 2, |_, _| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))).unitary()
    };
    let m = Tensor4::rank_one(c64(0.5, 0.25), &u(&mut r), &u(&mut r)).unwrap();
    let tensor = write_tensor(&dir, "m.json", &m);
    let out = dir.path().join("d.json");
    let csv = dir.path().join("steps.csv");
    let args = ["decompose", "--tensor", s(&tensor), "--eps", "0.3", "--out", s(&out), "--emit-csv", s(&csv)];
    assert!(ncgk(&args).status.success());
    assert_eq!(read_json(&out)["T"], Value::from(1));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);
    assert!(ncgk(&["verify", "--result", s(&out), "--tensor", s(&tensor)]).status.success());
}

#[test]
fn planted_procrustes_is_recovered() {
    let dir = TempDir::new().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let a = RMatrix::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0));
    let mats: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|_| {
            let m = random_orthogonal(&mut r, 3) * &a;
            (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
        })
        .collect();
    let input = dir.path().join("mats.json");
    std::fs::write(&input, serde_json::to_string(&mats).unwrap()).unwrap();
    let out = dir.path().join("p.json");
    assert!(ncgk(&["procrustes", "--matrices", s(&input), "--trials", "32", "--out", s(&out)]).status.success());
    let value = read_json(&out)["value"].as_f64().unwrap();
    assert!(value >= 0.2 * 9.0 * a.norm_squared());
    assert!(ncgk(&["verify", "--result", s(&out)]).status.success());
}

#[test]
fn pca_runs_and_verifies() {
    let dir = TempDir::new().unwrap();
    let points = dir.path().join("pts.csv");
    std::fs::write(&points, "1.0, 0.5\n-0.3,2.0\n0.7,-1.1\n").unwrap();
    for variant in ["r1", "l1"] {
        let out = dir.path().join(format!("{variant}.json"));
        let args = ["pca", "--points", s(&points), "--k", "1", "--variant", variant, "--trials", "32", "--out", s(&out)];
        assert!(ncgk(&args).status.success());
        assert!(ncgk(&["verify", "--result", s(&out)]).status.success());
    }
    let bad = ncgk(&["pca", "--points", s(&points), "--k", "3", "--variant", "r1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let garbage = dir.path().join("bad.json");
    std::fs::write(&garbage, "{\"n\": 2, \"field\": ").unwrap();
    assert_eq!(ncgk(&["solve", "--tensor", s(&garbage), "--mode", "complex"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(ncgk(&["solve", "--tensor", s(&missing), "--mode", "complex"]).status.code(), Some(2));
    let tensor = write_tensor(&dir, "m.json", &random_tensor(5, 2));
    assert_eq!(ncgk(&["solve", "--tensor", s(&tensor), "--mode", "hermitian"]).status.code(), Some(2));
    assert_eq!(ncgk(&["solve", "--tensor", s(&tensor), "--mode", "real"]).status.code(), Some(2));
    assert_eq!(ncgk(&["decompose", "--tensor", s(&tensor), "--eps", "0.9"]).status.code(), Some(2));
    assert_eq!(ncgk(&["solve", "--tensor", s(&tensor)]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let tensor = write_tensor(&dir, "m.json", &random_tensor(6, 2));
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_ncgk"))
            .env("NCGK_THREADS", threads)
            .args(["solve", "--tensor", s(&tensor), "--mode", "complex", "--trials", "64", "--seed", "9"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
    let bad = Command::new(env!("CARGO_BIN_EXE_ncgk"))
        .env("NCGK_THREADS", "zero")
        .args(["solve", "--tensor", s(&tensor), "--mode", "complex"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
