use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaussmeter"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "1");
    v
}

fn close(v: &Value, expect: f64, tol: f64) {
    let x = v.as_f64().unwrap();
    assert!((x - expect).abs() <= tol, "{x} vs {expect}");
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn er_gauge_examples() {
    let dir = TempDir::new().unwrap();
    let one = write(dir.path(), "one.json", r#"{"s":1,"re":[[1]]}"#);
    let v = json(&run(&["er-gauge", "--lambda", p(&one), "--noise", p(&one)]));
    close(&v["er"], 0.91829583405449, 1e-9);
    close(&v["ntilde"]["re"][0][0], 1.0 / 3.0, 1e-12);
    close(&v["k"]["re"][0][0], 2.0_f64.sqrt() / 3.0, 1e-12);
    assert_eq!(v["base"], "bits");

    let zero = write(dir.path(), "zero.json", r#"{"s":1,"re":[0]}"#);
    let five = write(dir.path(), "five.json", r#"{"s":1,"re":[5]}"#);
    let v = json(&run(&["er-gauge", "--lambda", p(&zero), "--noise", p(&five)]));
    close(&v["er"], 0.0, 1e-12);

    let id = write(dir.path(), "id.json", r#"{"s":2,"re":[[1,0],[0,1]]}"#);
    let v = json(&run(&["er-gauge", "--lambda", p(&id), "--noise", p(&id)]));
    close(&v["er"], 1.83659166810898, 1e-9);

    let v = json(&run(&["er-gauge", "--lambda", p(&one), "--noise", p(&one), "--base", "nats"]));
    close(&v["er"], 0.91829583405449 * 2.0_f64.ln(), 1e-9);
}

#[test]
fn er_general_examples() {
    let dir = TempDir::new().unwrap();
    let iso = write(dir.path(), "iso.json", r#"{"s":1,"re":[[1.5,0],[0,1.5]]}"#);
    let vac = write(dir.path(), "vac.json", r#"{"s":1,"re":[[0.5,0],[0,0.5]]}"#);
    let sq = write(dir.path(), "sq.json", r#"{"s":1,"re":[[2,0],[0,0.5]]}"#);
    let v = json(&run(&["er-general", "--alpha", p(&iso), "--beta", p(&iso)]));
    close(&v["er"], 0.91829583405449, 1e-9);
    close(&v["alpha_tilde"][0][0], 1.0 / 3.0 + 0.5, 1e-9);
    close(&v["symplectic_spectrum"]["alpha"][0], 1.5, 1e-12);

    let v = json(&run(&["er-general", "--alpha", p(&vac), "--beta", p(&iso)]));
    close(&v["er"], 0.0, 1e-12);

    let v = json(&run(&["er-general", "--alpha", p(&sq), "--beta", p(&iso)]));
    close(&v["er"], 0.6466166348885303, 1e-9);
}

#[test]
fn capacity_examples() {
    let dir = TempDir::new().unwrap();
    let one = write(dir.path(), "one.json", r#"{"s":1,"re":[[1]]}"#);
    let v = json(&run(&["capacity", "--noise", p(&one), "--energy", "1"]));
    close(&v["cea"], 0.91829583405449, 1e-9);
    close(&v["lambda"]["re"][0][0], 1.0, 1e-12);
    close(&v["gain"], 0.91829583405449 / 1.5_f64.log2(), 1e-9);

    let id = write(dir.path(), "id.json", r#"{"s":2,"re":[[1,0],[0,1]]}"#);
    let v = json(&run(&["capacity", "--noise", p(&id), "--epsilon", p(&id), "--energy", "2", "--seed", "3"]));
    close(&v["cea"], 1.83659166810898, 1e-6);
    close(&v["energy_used"], 2.0, 1e-6);
    assert_eq!(v["converged"], true);

    let out = run(&["capacity", "--noise", p(&one), "--energy", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not positive"));
}

#[test]
fn capacity_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let n = write(dir.path(), "n.json", r#"{"s":2,"re":[[0,0],[0,1]]}"#);
    let e = write(dir.path(), "e.json", r#"{"s":2,"re":[[1,0],[0,2]]}"#);
    let args = ["capacity", "--noise", p(&n), "--epsilon", p(&e), "--energy", "2", "--seed", "5"];
    let a = run(&args);
    let b = bin().args(args).env("GAUSSMETER_THREADS", "1").output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validation_failures_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"s":2,"re":[[1,0],[0,"x"]]}"#);
    let one = write(dir.path(), "one.json", r#"{"s":1,"re":[[1]]}"#);
    let out = run(&["er-gauge", "--lambda", p(&bad), "--noise", p(&one)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 1 column 1"), "{err}");

    let skew = write(dir.path(), "skew.json", r#"{"s":2,"re":[[1,2],[0,1]]}"#);
    let id = write(dir.path(), "id.json", r#"{"s":2,"re":[[1,0],[0,1]]}"#);
    let out = run(&["er-gauge", "--lambda", p(&skew), "--noise", p(&id)]);
    assert_eq!(out.status.code(), Some(2));

    let neg = write(dir.path(), "neg.json", r#"{"s":1,"re":[[-1]]}"#);
    let out = run(&["er-gauge", "--lambda", p(&neg), "--noise", p(&one)]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["er-gauge", "--lambda", p(&one), "--noise", p(&id)]);
    assert_eq!(out.status.code(), Some(2));

    let sub = write(dir.path(), "sub.json", r#"{"s":1,"re":[[0.3,0],[0,0.3]]}"#);
    let out = run(&["er-general", "--alpha", p(&sub), "--beta", p(&sub)]);
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["er-gauge", "--lambda", p(&one), "--noise", p(&one)])
        .env("GAUSSMETER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_reproduces_figure_shape() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"N":[0,1,10],"E":{"min":0.01,"max":100,"count":41,"scale":"log"},"base":"bits"}"#,
    );
    let csv_path = dir.path().join("out.csv");
    let svg_path = dir.path().join("out.svg");
    let out = run(&["sweep", "--spec", p(&spec), "--out", p(&csv_path), "--svg", p(&svg_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(!text.contains('\r'));
    let rows = parse_csv(&text);
    assert_eq!(rows[0], ["N", "E", "C_ea", "C", "G"]);
    assert_eq!(rows.len(), 1 + 3 * 41);
    let values: Vec<Vec<f64>> = rows[1..]
        .iter()
        .map(|r| r.iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    for curve in values.chunks(41) {
        assert!(curve.windows(2).all(|w| w[1][4] < w[0][4]), "G must decrease in E");
        assert!(curve.iter().all(|r| r[2] >= r[3]), "C_ea >= C");
        assert!(curve.windows(2).all(|w| w[0][0] == w[1][0] && w[1][1] > w[0][1]));
    }

    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 9);
}

#[test]
fn sweep_csv_round_trips() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"N":[0.5,3],"E":{"min":0.001,"max":1000,"count":17}}"#);
    let out = run(&["sweep", "--spec", p(&spec)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = parse_csv(&text);
    for row in &rows[1..] {
        for cell in row {
            let x: f64 = cell.parse().unwrap();
            let again: f64 = format!("{x:.11e}").parse().unwrap();
            assert_eq!(x.to_bits(), again.to_bits(), "{cell} is not a 12-digit value");
        }
    }
    // re-emitting the parsed values reproduces the file byte for byte
    let again = run(&["sweep", "--spec", p(&spec)]);
    assert_eq!(again.stdout, text.as_bytes());
}

#[test]
fn sweep_single_row() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"N":[0],"E":{"min":1,"max":1,"count":1}}"#);
    let out = run(&["sweep", "--spec", p(&spec)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "N,E,C_ea,C,G\n0,1,2,1,2\n");

    let bad = write(dir.path(), "bad.json", r#"{"N":[0],"E":{"min":-1,"max":1,"count":1}}"#);
    assert_eq!(run(&["sweep", "--spec", p(&bad)]).status.code(), Some(2));
}

#[test]
fn verify_cp_and_determinism() {
    let out = run(&["verify", "--case", "cp", "--seed", "7"]);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["suites"][0]["suite"], "cp");
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("PASS") && !table.contains("FAIL"));

    let again = run(&["verify", "--case", "correspondence", "--seed", "7"]);
    let twice = run(&["verify", "--case", "correspondence", "--seed", "7"]);
    assert_eq!(again.stdout, twice.stdout);
    assert_eq!(json(&again)["passed"], true);
}

#[test]
fn verify_lemma1_table() {
    let out = run(&["verify", "--case", "lemma1"]);
    let v = json(&out);
    for check in v["suites"][0]["checks"].as_array().unwrap() {
        assert!(check["value"].as_f64().unwrap() <= 1e-4);
    }
}
