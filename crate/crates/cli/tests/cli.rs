//! The `loupe` binary end to end: exit statuses and the files it writes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loupe_core::volume::{load_raw, VolumeMeta};
use tempfile::TempDir;

fn loupe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loupe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(loupe(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(loupe(&["render"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.session");
    let out = loupe(&["replay", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.session"));
    assert_eq!(loupe(&["--help"]).status.code(), Some(0));
}

#[test]
fn replaying_the_wreck_session_passes_and_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let out = loupe(&["replay", s(&repo("sessions/wreck.session")), "--out", s(dir.path())]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let snapshots = report["snapshots"].as_object().expect("snapshot map");
    assert!(!snapshots.is_empty());
    let pngs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, snapshots.len());
}

#[test]
fn a_failed_assertion_exits_1() {
    let dir = TempDir::new().unwrap();
    let header = std::fs::read_to_string(repo("sessions/wreck.session"))
        .unwrap()
        .lines()
        .find(|l| l.contains(r#""type":"header""#))
        .unwrap()
        .to_string();
    let script = dir.path().join("bad.session");
    std::fs::write(
        &script,
        format!("{header}\n{{\"type\":\"assert\",\"query\":{{\"kind\":\"lens_count\"}},\"expected\":2,\"tolerance\":0.0}}\n"),
    )
    .unwrap();
    let out = loupe(&["replay", s(&script), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert!(dir.path().join("o/report.json").exists());
}

#[test]
fn phantom_round_trips_through_the_raw_loader() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("seabed.raw");
    let out = loupe(&["phantom", "default", "--out", s(&raw), "--dtype", "f32"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = VolumeMeta::read(&raw.with_extension("toml")).unwrap();
    let grid = load_raw(&raw, &meta).unwrap();
    assert_eq!(grid.dims(), meta.dims);
    assert!(grid.values().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn render_writes_an_image() {
    let dir = TempDir::new().unwrap();
    let png = dir.path().join("frame.png");
    let out = loupe(&[
        "render",
        s(&repo("scenes/wreck.json")),
        "--out",
        s(&png),
        "--width",
        "64",
        "--height",
        "48",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&png).unwrap();
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");

    let bad = loupe(&["render", s(&repo("scenes/wreck.json")), "--out", s(&png), "--fov", "200"]);
    assert_eq!(bad.status.code(), Some(2));
}
