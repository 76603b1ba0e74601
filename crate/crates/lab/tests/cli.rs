use std::path::Path;
use std::process::Command;

fn spike4(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spike4")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

#[test]
fn constants_run_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = spike4(&["constants", "--config", &config("constants.toml"), "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("constants.json")).unwrap()).unwrap();
    assert_eq!(rep["schema"], 1);
    assert_eq!(rep["kind"], "constants");
    assert_eq!(rep["all_pass"], true);
    let csv = std::fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert!(csv.starts_with("name,value\n"));
}

#[test]
fn report_merges_and_rejects_foreign_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    spike4(&["constants", "--config", &config("constants.toml"), "--out", out, "--quiet"]);
    let json = dir.path().join("constants.json");
    let o = spike4(&["report", json.to_str().unwrap(), "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("report,kind,assertion,pass,margin\n"));
    assert!(summary.lines().count() > 1);

    let text = std::fs::read_to_string(&json).unwrap().replacen("\"schema\": 1", "\"schema\": 9", 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text).unwrap();
    let o = spike4(&["report", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "kind = \"constants\"\n[params\n").unwrap();
    let o = spike4(&["constants", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("constants.json").exists());
}
