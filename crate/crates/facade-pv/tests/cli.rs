use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_facade-pv");

fn testdata() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata")
}

fn assess(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(BIN)
        .arg("assess")
        .arg("--facades")
        .arg(testdata().join("facades"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

#[test]
fn deterministic_run_succeeds_and_writes_reports() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let (code, stdout) = assess(&[], &out);
    assert_eq!(code, 0);
    assert!(stdout.contains("1 buildings, 0 failed"));
    for f in ["buildings.csv", "monthly_long.csv", "aggregate.json", "timings.csv", "layouts/worked_example.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(out.join("buildings.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("building_id,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn partial_failure_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    fs::create_dir_all(tmp.path().join("weather")).unwrap();
    let weather = tmp.path().join("weather");
    let (code, _) = assess(&["--sky", "tmy", "--weather", weather.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(code, 2);
}

#[test]
fn bad_configuration_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let (code, _) = assess(&["--sky", "tmy"], &tmp.path().join("out"));
    assert_eq!(code, 1);
    let (code, _) = assess(&["--min-short-edge=-1"], &tmp.path().join("out"));
    assert_eq!(code, 1);
}

#[test]
fn llm_mode_replays_a_mock_script() {
    let tmp = TempDir::new().unwrap();
    let script = tmp.path().join("script.json");
    let reply = r#"{"installable_rectangles": [[450, 200, 850, 400], [0, 520, 600, 800], [750, 520, 1200, 800]]}"#;
    fs::write(&script, serde_json::to_string(&["not json", reply]).unwrap()).unwrap();
    let out = tmp.path().join("out");
    let (code, _) = assess(&["--mode", "llm", "--llm-mock", script.to_str().unwrap()], &out);
    assert_eq!(code, 0);
    assert!(out.join("llm_log.json").is_file());
    assert!(fs::read_to_string(out.join("buildings.csv")).unwrap().contains("llm_validated"));
}

#[test]
fn evaluate_prints_a_report() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(assess(&[], &out).0, 0);
    let o = Command::new(BIN)
        .arg("evaluate")
        .arg("--facades")
        .arg(testdata().join("facades"))
        .arg("--truth")
        .arg(out.join("layouts"))
        .arg("--pred")
        .arg(out.join("layouts"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["buildings"][0]["epsilon"], 0.0);
}
