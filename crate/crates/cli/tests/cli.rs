use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn fluctlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluctlab"))
        .arg("--quiet")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    manifest(&format!("scenarios/{name}.json")).display().to_string()
}

fn data(name: &str) -> String {
    manifest(&format!("tests/data/{name}")).display().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn field(v: &Value, key: &str) -> f64 {
    v["report"][key].as_f64().unwrap()
}

fn golden() -> BTreeMap<String, f64> {
    fs::read_to_string(manifest("../core/tests/data/amplitude_damping.golden"))
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.trim().to_string(), v.trim().parse().unwrap())
        })
        .collect()
}

/// Parses a CSV into (header, rows).
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (head, rows) = table(path);
    let i = head.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn identity_run_has_unit_gamma() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["run", &scenario("identity")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(field(&r, "gamma"), 1.0);
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["unital"], Value::Bool(true));
    for f in ["pf.csv", "pb.csv", "pb_unnormalized.csv", "summary.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn amplitude_damping_run_matches_golden_values() {
    let g = golden();
    for name in ["amplitude_damping", "amplitude_damping_kraus"] {
        let dir = TempDir::new().unwrap();
        let out = fluctlab(dir.path(), &["run", &scenario(name)]);
        assert_eq!(out.status.code(), Some(0));
        let r = report(dir.path());
        for key in ["gamma", "x", "kl", "delta_u", "delta_f", "excess_energy", "delta_s", "delta_s_v", "s_r_final"] {
            assert!((field(&r, key) - g[key]).abs() < 1e-12, "{name} {key}: {} vs {}", field(&r, key), g[key]);
        }
        // Rounded values quoted alongside the golden file.
        assert!((field(&r, "delta_u") + 0.268941).abs() < 1e-5);
        assert!((field(&r, "gamma") - 1.462117).abs() < 1e-5);
        assert!((field(&r, "kl") - 0.110942).abs() < 1e-5);
        assert!((field(&r, "delta_s") + 0.268943).abs() < 1e-5);

        let pf = dir.path().join("pf.csv");
        assert_eq!(column(&pf, "delta_u"), vec![-1.0, 0.0]);
        let p1 = 1.0 / (1.0 + 1f64.exp());
        let mass = column(&pf, "mass");
        assert!((mass[0] - p1).abs() < 1e-15 && (mass[1] - (1.0 - p1)).abs() < 1e-15);
        let pb = column(&dir.path().join("pb.csv"), "mass");
        assert!((pb.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let raw = column(&dir.path().join("pb_unnormalized.csv"), "mass");
        assert!((raw.iter().sum::<f64>() - g["gamma"]).abs() < 1e-12);
    }
}

#[test]
fn non_hermitian_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["run", &data("not_hermitian.json")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not Hermitian"), "{err}");
    assert!(err.contains("h_initial"), "{err}");
    assert!(!err.contains("panicked"), "{err}");
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["run", &data("truncated.json")]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line "), "{err}");
}

#[test]
fn missing_file_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["run", &data("does_not_exist.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn threshold_violation_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["--tol", "1e-300", "run", &scenario("rotated_qutrit")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(dir.path())["passed"], Value::Bool(false));
}

#[test]
fn beta_sweep_keeps_entropy_change_negative() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(
        dir.path(),
        &["sweep", &scenario("amplitude_damping"), "--param", "beta", "--values", "0.1,1,10"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("sweep.csv");
    assert_eq!(column(&csv, "beta"), vec![0.1, 1.0, 10.0]);
    let ds = column(&csv, "delta_s");
    assert_eq!(ds.len(), 3);
    for (b, s) in [0.1, 1.0, 10.0f64].iter().zip(&ds) {
        // Full damping from a thermal qubit: ΔS = βΔU with ΔU = -1/(1+e^β).
        let want = -b / (1.0 + b.exp());
        assert!(*s < 0.0);
        assert!((s - want).abs() < 1e-12, "{s} vs {want}");
    }
}

#[test]
fn damping_sweep_raises_gamma_from_one() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(
        dir.path(),
        &["sweep", &scenario("amplitude_damping"), "--param", "channel.p", "--values", "0,0.5,1"],
    );
    assert_eq!(out.status.code(), Some(0));
    let gamma = column(&dir.path().join("sweep.csv"), "gamma");
    assert_eq!(gamma[0], 1.0);
    assert!(gamma[0] < gamma[1] && gamma[1] < gamma[2]);
    for (p, g) in [0.0, 0.5, 1.0f64].iter().zip(&gamma) {
        // tr[ΣAA† ρ'_eq] = 1 + p tanh(β/2) at β = 1.
        assert!((g - (1.0 + p * 0.5f64.tanh())).abs() < 1e-12);
    }
}

#[test]
fn sweep_rejects_bad_requests() {
    let dir = TempDir::new().unwrap();
    let ad = scenario("amplitude_damping");
    let empty = fluctlab(dir.path(), &["sweep", &ad, "--param", "beta"]);
    assert_eq!(empty.status.code(), Some(1));
    let unknown = fluctlab(dir.path(), &["sweep", &ad, "--param", "temperature", "--values", "1"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("unknown sweep parameter"));
    let no_params = fluctlab(dir.path(), &["sweep", &scenario("identity"), "--param", "channel.p", "--values", "1"]);
    assert_eq!(no_params.status.code(), Some(1));
}

#[test]
fn mixed_batch_passes() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["batch", &scenario("batch_mixed")]);
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("batch.csv");
    let (head, rows) = table(&csv);
    assert_eq!(
        head,
        ["seed", "dim", "unital", "gamma", "x", "kl", "delta_u", "delta_s", "max_residual"]
    );
    assert_eq!(rows.len(), 100);
    let unital: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert!(unital.contains(&"true") && unital.contains(&"false"));
    assert!(column(&csv, "max_residual").iter().all(|&r| r < 1e-8));
    let seeds: Vec<f64> = column(&csv, "seed");
    assert_eq!(seeds, (1..=100).map(f64::from).collect::<Vec<_>>());
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("aggregate max residual"));
}

#[test]
fn unital_batch_has_unit_gamma() {
    let dir = TempDir::new().unwrap();
    let out = fluctlab(dir.path(), &["batch", &scenario("batch_unital")]);
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("batch.csv");
    assert!(column(&csv, "gamma").iter().all(|g| (g - 1.0).abs() < 1e-10));
    assert!(column(&csv, "delta_s").iter().all(|&s| s >= -1e-10));
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        assert_eq!(fluctlab(dir.path(), &["batch", &data("single_case.json")]).status.code(), Some(0));
        assert_eq!(fluctlab(dir.path(), &["run", &scenario("rotated_qutrit")]).status.code(), Some(0));
    }
    for f in ["batch.csv", "report.json", "pf.csv", "pb.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn batch_rows_reproduce_from_their_seed() {
    let whole = TempDir::new().unwrap();
    assert_eq!(fluctlab(whole.path(), &["batch", &scenario("batch_mixed")]).status.code(), Some(0));
    let (_, rows) = table(&whole.path().join("batch.csv"));
    let row = &rows[41];

    let single = TempDir::new().unwrap();
    let spec = single.path().join("one.json");
    fs::write(
        &spec,
        r#"{"count": 1, "dim_range": [2, 5], "n_kraus_range": [1, 4], "beta_set": [0.2, 1.0, 5.0]}"#,
    )
    .unwrap();
    let out = fluctlab(single.path(), &["--seed", &row[0], "batch", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (_, again) = table(&single.path().join("batch.csv"));
    assert_eq!(&again[0], row);
}

#[test]
fn seed_override_changes_random_preset() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    fluctlab(a.path(), &["run", &scenario("rotated_qutrit")]);
    fluctlab(b.path(), &["--seed", "43", "run", &scenario("rotated_qutrit")]);
    assert_eq!(report(b.path())["seed"], Value::from(43));
    assert_ne!(field(&report(a.path()), "gamma"), field(&report(b.path()), "gamma"));
}
