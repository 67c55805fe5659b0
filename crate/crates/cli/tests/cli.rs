use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poseidon-sim"))
}

fn scenario(file: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", file]
        .iter()
        .collect()
}

#[test]
fn run_with_baseline_writes_relative_csv() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base");
    let attack = dir.path().join("attack");
    let status = bin()
        .args(["run", "--until", "3000", "--out"])
        .arg(&base)
        .arg("--scenario")
        .arg(scenario("baseline.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let out = bin()
        .args(["run", "--until", "3000", "--mode", "pushback", "--out"])
        .arg(&attack)
        .arg("--scenario")
        .arg(scenario("attack.json"))
        .arg("--baseline")
        .arg(&base)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rel = std::fs::read_to_string(attack.join("relative.csv")).unwrap();
    assert!(rel.starts_with("router,percent\n"));
    assert!(rel.lines().any(|l| l.starts_with("R3,")));
    let metrics = std::fs::read_to_string(attack.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("time_ms,router,"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("R3"));
}

#[test]
fn missing_scenario_exits_with_2() {
    let status = bin()
        .args(["run", "--scenario", "/nonexistent/scenario.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn malformed_scenario_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"topology": {"nodes": [], "links": []}, "horizon_ms": "soon"}"#,
    )
    .unwrap();
    let out = bin()
        .args(["run", "--out"])
        .arg(dir.path())
        .arg("--scenario")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon_ms"));
}

#[test]
fn missing_baseline_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--until", "100", "--out"])
        .arg(dir.path())
        .arg("--scenario")
        .arg(scenario("baseline.json"))
        .arg("--baseline")
        .arg(dir.path().join("nowhere"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
