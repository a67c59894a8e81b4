use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn docgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docgate"))
        .args(args)
        .env_remove("DOCGATE_CONFIG")
        .env_remove("DOCGATE_TOKEN")
        .output()
        .unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|e| panic!("{e}: {stderr}"))
}

fn closed_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

fn seeded(dir: &Path) -> PathBuf {
    let port = closed_port().to_string();
    let out = docgate(&[
        "seed-demo",
        "--dir",
        dir.to_str().unwrap(),
        "--base-port",
        &port,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let config = stdout
        .lines()
        .next()
        .unwrap()
        .strip_prefix("config=")
        .unwrap();
    PathBuf::from(config)
}

#[test]
fn missing_config_exits_2_with_json_error() {
    let out = docgate(&["reprocess", "swetslike"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "Config");
}

#[test]
fn seed_demo_writes_config_and_ingests_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let config = seeded(dir.path());
    assert!(config.exists());
    let again = docgate(&[
        "--config",
        config.to_str().unwrap(),
        "reprocess",
        "swetslike",
    ]);
    assert!(again.status.success());
    assert!(String::from_utf8_lossy(&again.stdout).starts_with("stored=0 "));
}

#[test]
fn unknown_provider_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = seeded(dir.path());
    let out = docgate(&["--config", config.to_str().unwrap(), "reprocess", "nobody"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_line(&out)["error"], "UnknownProvider");
}

#[test]
fn unreachable_summary_server_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = seeded(dir.path());
    let out = docgate(&[
        "--config",
        config.to_str().unwrap(),
        "request",
        "10.1.0.5",
        "researcher",
        "J1:v3:i1:a1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn stats_export_rejects_bad_dates_before_connecting() {
    let dir = tempfile::tempdir().unwrap();
    let config = seeded(dir.path());
    let csv = dir.path().join("out.csv");
    let out = docgate(&[
        "--config",
        config.to_str().unwrap(),
        "stats-export",
        "yesterday",
        "2001-10-02",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_line(&out)["error"], "InvalidRange");
    assert!(!csv.exists());
}
