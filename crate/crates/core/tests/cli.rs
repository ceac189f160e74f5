use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_finsler");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("FINSLER_CONFIG").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn constants_table_and_ranges() {
    let o = run(&["constants", "--family", "sobolev", "--N", "3", "--p", "2", "--norm", "euclidean"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("5.477904089531"), "{s}");
    assert!(s.contains("tilde"));

    let o = run(&["constants", "--family", "gn", "--N", "3", "--q", "2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["values"]["theta"], 0.5);

    let o = run(&["constants", "--family", "sobolev", "--N", "3", "--p", "3.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 < p < N"));
}

#[test]
fn verify_exit_codes() {
    let o = run(&["verify", "--family", "sobolev", "--extremal", "a=1,b=1", "--N", "3", "--p", "2", "--R", "1", "--norm", "euclidean"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["pass"], true);
    let (d, rhs) = (v["deficit"].as_f64().unwrap(), v["rhs"].as_f64().unwrap());
    assert!(d.abs() / rhs <= 1e-6);
    assert_eq!(v["schema_version"], 1);

    let o = run(&["verify", "--family", "sobolev", "--profile", "linear-cutoff"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["deficit"].as_f64().unwrap() > v["error_budget"].as_f64().unwrap());

    assert_eq!(code(&run(&["verify", "--family", "trace", "--N", "3", "--p", "2"])), 2);
    assert_eq!(code(&run(&["verify", "--family", "sobolev", "--extremal", "z=1"])), 2);
    assert_eq!(code(&run(&["verify", "--family", "tm", "--profile", "linear-cutoff"])), 2);
    assert_eq!(code(&run(&["verify", "--family", "nope"])), 2);
}

#[test]
fn verify_reads_the_config_variable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"N": 4, "p": 2.5, "format": "csv"}"#).unwrap();
    let o = Command::new(BIN).args(["verify", "--family", "sobolev"]).env("FINSLER_CONFIG", &cfg).output().unwrap();
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.starts_with("family,"), "{s}");
    assert!(s.contains("N=4;R=1;p=2.5"), "{s}");
}

fn suite(cfg: Option<&Path>, out: &Path) -> Output {
    let mut args = vec!["suite".to_string()];
    if let Some(c) = cfg {
        args.push(c.display().to_string());
    }
    args.extend(["--out".to_string(), out.display().to_string()]);
    Command::new(BIN).args(&args).env_remove("FINSLER_CONFIG").output().unwrap()
}

#[test]
fn suite_contract() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let o = suite(None, &a);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&suite(None, &b)), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["criteria"].as_array().unwrap().len(), 10);
    assert_eq!(report["pass"], true);

    let tight = dir.path().join("tight.json");
    std::fs::write(&tight, r#"{"tolerances": {"smooth": 1e-14, "singular": 1e-14, "two_d": 1e-14, "rel_floor": 1e-14, "identity": 1e-14}}"#).unwrap();
    let out = dir.path().join("tight_out.csv");
    let o = Command::new(BIN).args(["suite", tight.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()]).output().unwrap();
    assert_eq!(code(&o), 1);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.ends_with(",false,")), "failed rows are reported");
}

#[test]
fn suite_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(code(&suite(Some(&dir.path().join("missing.json")), &out)), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"tolerances": {"smoth": 1e-9}}"#).unwrap();
    let o = suite(Some(&bad), &out);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerances.smoth"));
    assert!(!out.exists());
}

fn table(args: &[&str]) -> Vec<Vec<f64>> {
    let o = run(args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("s,r,profile,weight"));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn plotdata_grid_and_values() {
    let rows = table(&["plotdata", "--family", "sobolev", "--N", "3", "--p", "2", "--R", "1", "--extremal", "a=1,b=1"]);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert!(rows.last().unwrap()[0] < 1.0);
    let half = rows.iter().find(|r| r[0] == 0.5).expect("row at s = 1/2");
    assert!((half[3] - 16.0).abs() < 1e-12);
    assert!((half[2] - 0.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(code(&run(&["plotdata", "--family", "sobolev", "--N", "3", "--p", "3"])), 2);
}
