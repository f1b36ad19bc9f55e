use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const HEAD: &str = "OS,Function,Type,Operation,Final_FTR_RET,Operation_FTR_RET,Original_FTR_RET,Final_DET,Operation_DET,Original_DET,FP,PctImpact,PM,System,Hours,Team\n";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn efm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efmetrics"))
        .args(args)
        .env_remove("EFMETRICS_COEFFS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn check_golden(name: &str, actual: &str) {
    let path = fixture("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        actual,
        "{name} differs from golden file"
    );
}

#[test]
fn usage_exit_codes() {
    assert_eq!(code(&efm(&["--bogus"])), 64);
    assert_eq!(code(&efm(&["measure", "--nope", "x.csv"])), 64);
    assert_eq!(code(&efm(&["frobnicate"])), 64);
    assert_eq!(code(&efm(&["--help"])), 0);
    assert_eq!(code(&efm(&["--version"])), 0);
    for sub in ["measure", "derive", "evaluate", "indicators", "chart"] {
        let o = efm(&[sub, "--help"]);
        assert_eq!(code(&o), 0);
        assert!(String::from_utf8_lossy(&o.stdout).contains("Usage"));
    }
    assert_eq!(code(&efm(&["measure", "/definitely/missing.csv"])), 1);
}

#[test]
fn measure_single_eq() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "one.csv",
        &format!("{HEAD}1,F1,EQ,I,1,1,,5,5,,3,100,3,S,10,1\n"),
    );
    let o = efm(&["measure", &csv]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["requests"][0]["ef"].as_f64().unwrap(), 2.01);
    assert_eq!(v["systems"][0]["fp"].as_f64().unwrap(), 3.0);
}

#[test]
fn measure_rejection_and_strict() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{HEAD}1,F1,EQ,I,1,1,,5,5,,3,100,3,S,10,1\n2,F2,EQ,A,1,1,,5,2,,3,,,S,10,1\n");
    let csv = write(dir.path(), "bad.csv", &body);
    let o = efm(&["measure", &csv]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["ingest"]["rejected_orders"], 1);
    assert_eq!(v["ingest"]["reject_reasons"][0]["os_id"], "2");
    assert_eq!(v["requests"].as_array().unwrap().len(), 1);
    assert_eq!(code(&efm(&["measure", "--strict", &csv])), 2);
}

#[test]
fn custom_coefficients_override() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "one.csv",
        &format!("{HEAD}1,F1,EQ,I,1,1,,5,5,,3,100,3,S,10,1\n"),
    );
    let custom = r#"{"EI":{"constant":0.75,"coef_files":0.91,"coef_det":0.13},
        "EO":{"constant":1.0,"coef_files":0.81,"coef_det":0.13},
        "EQ":{"constant":1.0,"coef_files":1.0,"coef_det":1.0},
        "ILF":{"constant":1.75,"coef_files":0.96,"coef_det":0.12},
        "EIF":{"constant":1.25,"coef_files":0.65,"coef_det":0.08}}"#;
    let coeffs = write(dir.path(), "c.json", custom);
    let o = efm(&["measure", &csv, "--coefficients", &coeffs]);
    assert_eq!(json(&o)["requests"][0]["ef"].as_f64().unwrap(), 7.0);

    let o = Command::new(env!("CARGO_BIN_EXE_efmetrics"))
        .args(["measure", &csv])
        .env("EFMETRICS_COEFFS", &coeffs)
        .output()
        .unwrap();
    assert_eq!(json(&o)["requests"][0]["ef"].as_f64().unwrap(), 7.0);

    let broken = write(
        dir.path(),
        "broken.json",
        r#"{"EQ":{"constant":1.0,"coef_files":1.0,"coef_det":1.0}}"#,
    );
    assert_eq!(code(&efm(&["measure", &csv, "--coefficients", &broken])), 1);
}

#[test]
fn derive_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = efm(&["derive", "--out-dir", out]);
    assert_eq!(code(&o), 0);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("derivation_report.json")).unwrap()).unwrap();
    let eq = report["types"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["ft"] == "EQ")
        .unwrap();
    assert_eq!(eq["records"], 165);
    assert!(dir.path().join("derivation_report.txt").exists());

    let coeffs = dir.path().join("coefficients.json");
    let m = efm(&[
        "measure",
        fixture("sample.csv").to_str().unwrap(),
        "--coefficients",
        coeffs.to_str().unwrap(),
    ]);
    assert_eq!(code(&m), 0);
    assert!(m.stderr.is_empty(), "{}", String::from_utf8_lossy(&m.stderr));
    assert!(json(&m)["ingest"]["warnings"].as_array().unwrap().is_empty());

    let variant = tempfile::tempdir().unwrap();
    let o = efm(&[
        "derive",
        "--bounding",
        "sum-of-ranges",
        "--out-dir",
        variant.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("NON-STANDARD"));
    let cfg: Value =
        serde_json::from_str(&fs::read_to_string(variant.path().join("coefficients.json")).unwrap()).unwrap();
    assert_eq!(cfg["standard"], false);
    assert_ne!(cfg["coefficients"]["EQ"]["coef_files"].as_f64().unwrap(), 0.76);
}

#[test]
fn evaluate_threshold_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = HEAD.to_string();
    for i in 1..=14 {
        body.push_str(&format!("{i},F{i},EQ,I,1,1,,5,5,,3,100,3,S,{},1\n", 10 + i));
    }
    let csv = write(dir.path(), "small.csv", &body);
    let out = dir.path().join("out");
    let o = efm(&["evaluate", &csv, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("study is empty"));
    let study: Value = serde_json::from_str(&fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    assert!(study["systems"].as_array().unwrap().is_empty());
    assert_eq!(code(&efm(&["evaluate", &csv, "--alpha", "1.5"])), 64);
}

#[test]
fn evaluate_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = efm(&[
        "evaluate",
        fixture("study.csv").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    check_golden(
        "study.json",
        &fs::read_to_string(dir.path().join("study.json")).unwrap(),
    );
    assert!(dir.path().join("study.txt").exists());
}

#[test]
fn chart_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chart.svg");
    let o = efm(&[
        "chart",
        fixture("period_log.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    check_golden("chart.svg", &fs::read_to_string(&out).unwrap());

    let o = efm(&[
        "chart",
        fixture("period_log.json").to_str().unwrap(),
        "--max-col-width",
        "200",
        "--row-height",
        "30",
    ]);
    let svg = String::from_utf8(o.stdout).unwrap();
    assert!(svg.contains(r#"width="200.00""#));
    let o = efm(&[
        "chart",
        fixture("period_log.json").to_str().unwrap(),
        "--period",
        "1999",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn indicators_report() {
    let o = efm(&["indicators", fixture("period_log.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let periods = v["periods"].as_array().unwrap();
    assert_eq!(periods.len(), 9);
    assert!(periods.iter().all(|p| p["indicators"].as_array().unwrap().len() == 7));
    let text = efm(&[
        "indicators",
        fixture("period_log.json").to_str().unwrap(),
        "--format",
        "text",
    ]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("undefined"));
}
