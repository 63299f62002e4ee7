use std::path::Path;
use std::process::{Command, Output};

fn fb_lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fb-lab")).current_dir(dir).args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn criterion_ratio_at_three() {
    let d = tempfile::tempdir().unwrap();
    let o = fb_lab(d.path(), &["stability", "criterion", "--p", "3", "--out", "c.json"]);
    assert!(o.status.success());
    let v = json(&d.path().join("c.json"));
    assert!((v["ratio"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["admissible"], false);
}

#[test]
fn profile_residual_column() {
    let d = tempfile::tempdir().unwrap();
    let o = fb_lab(d.path(), &["profile", "--p", "2", "--ic", "1,0", "--tol", "1e-12", "--dense", "200", "--out", "p.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&d.path().join("p.csv"));
    assert_eq!(h, ["theta", "f", "fdot", "residual"]);
    assert_eq!(rows.len(), 200);
    let r = col(&h, "residual");
    let worst = rows.iter().map(|x| x[r].parse::<f64>().unwrap().abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn invalid_exponent_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = fb_lab(d.path(), &["profile", "--p", "0.5", "--out", "p.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p must exceed 1"));
    assert!(!d.path().join("p.csv").exists());
}

#[test]
fn usage_error_exits_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(fb_lab(d.path(), &["cone", "--bogus"]).status.code(), Some(2));
}

#[test]
fn sweep_criterion_rows() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("s.json"), r#"{"command":"stability-criterion","grid":{"p":[2,2.5,3,4,4.9]}}"#).unwrap();
    let o = fb_lab(d.path(), &["sweep", "--config", "s.json", "--out", "s.csv"]);
    assert!(o.status.success());
    let (h, rows) = csv_rows(&d.path().join("s.csv"));
    assert_eq!(rows.len(), 5);
    let (pc, rc) = (col(&h, "p"), col(&h, "ratio"));
    for row in rows {
        let p: f64 = row[pc].parse().unwrap();
        let ratio: f64 = row[rc].parse().unwrap();
        assert!((ratio - 4.0 / (p - 1.0)).abs() < 1e-10, "p {p}");
    }
}

#[test]
fn sweep_delta_scaling() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("s.json"),
        r#"{"command":"stability-cone","grid":{"delta":[0.1,0.01,0.001]},"fixed":{"p":3}}"#,
    )
    .unwrap();
    let o = fb_lab(d.path(), &["sweep", "--config", "s.json", "--out", "s.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&d.path().join("s.csv"));
    let c = col(&h, "delta_scaled");
    let v: Vec<f64> = rows.iter().map(|r| r[c].parse().unwrap()).collect();
    assert_eq!(v.len(), 3);
    assert!(v.iter().all(|x| (x / v[0] - 1.0).abs() < 5e-4), "{v:?}");
}

#[test]
fn sweep_edge_cases() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("e.json"), r#"{"command":"stability-criterion","grid":{},"fixed":{"p":3}}"#).unwrap();
    assert!(fb_lab(d.path(), &["sweep", "--config", "e.json", "--out", "e.csv"]).status.success());
    let (_, rows) = csv_rows(&d.path().join("e.csv"));
    assert!(rows.is_empty());
    std::fs::write(d.path().join("u.json"), r#"{"command":"stability-criterion","grid":{"q":[1]}}"#).unwrap();
    assert_eq!(fb_lab(d.path(), &["sweep", "--config", "u.json", "--out", "u.csv"]).status.code(), Some(2));
}

#[test]
fn log2d_value() {
    let d = tempfile::tempdir().unwrap();
    assert!(fb_lab(d.path(), &["stability", "log2d", "--N", "100", "--out", "l.json"]).status.success());
    let v = json(&d.path().join("l.json"));
    assert!((v["value"].as_f64().unwrap() - 2.0 * std::f64::consts::PI / 100.0).abs() < 1e-12);
}
