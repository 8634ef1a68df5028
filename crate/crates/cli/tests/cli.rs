use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use imtriage_fixtures::golden_dir;
use tempfile::TempDir;

fn imtriage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imtriage")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn golden_tar() -> PathBuf {
    golden_dir().join("golden.tar")
}

fn unpack(dir: &Path) -> PathBuf {
    let root = dir.join("tree");
    tar::Archive::new(fs::File::open(golden_tar()).unwrap()).unpack(&root).unwrap();
    root
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scan_lists_golden_stores() {
    let o = imtriage(&["scan", s(&golden_tar())]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 8, "{out}");
    assert!(lines.contains(&"whatsapp\tmessage-db\tpath-and-magic\tdata/data/com.whatsapp/databases/msgstore.db"));
    assert_eq!(lines.iter().filter(|l| l.contains("\tencrypted-backup\t")).count(), 1);
}

#[test]
fn usage_errors_exit_two() {
    let o = imtriage(&["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&imtriage(&["scan"])), 2);
    assert_eq!(code(&imtriage(&["scan", "/no/such/extraction"])), 2);
    assert_eq!(code(&imtriage(&["parse", s(&golden_tar()), "--format", "html"])), 2);
    // csv needs a directory
    assert_eq!(code(&imtriage(&["parse", s(&golden_tar()), "--format", "csv"])), 2);
}

#[test]
fn hash_then_verify() {
    let tmp = TempDir::new().unwrap();
    let root = unpack(tmp.path());
    let manifest = tmp.path().join("manifest.txt");
    assert_eq!(code(&imtriage(&["hash", s(&root), "-o", s(&manifest)])), 0);
    let o = imtriage(&["verify", s(&root), "-m", s(&manifest)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());

    let victim = root.join("data/data/com.whatsapp/databases/wa.db");
    let mut bytes = fs::read(&victim).unwrap();
    bytes[100] ^= 0x01;
    fs::write(&victim, &bytes).unwrap();
    let o = imtriage(&["verify", s(&root), "-m", s(&manifest)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("MISMATCH\tdata/data/com.whatsapp/databases/wa.db"));

    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "not a manifest\n").unwrap();
    assert_eq!(code(&imtriage(&["verify", s(&root), "-m", s(&bad)])), 2);
}

#[test]
fn parse_matches_golden_report() {
    let o = imtriage(&["parse", s(&golden_tar()), "--case-id", "golden"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout == fs::read(golden_dir().join("expected_report.json")).unwrap());
}

#[test]
fn csv_and_report_rendering() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("csv");
    let json = tmp.path().join("report.json");
    assert_eq!(code(&imtriage(&["parse", s(&golden_tar()), "--format", "csv", "--out", s(&csv)])), 0);
    let summaries = fs::read_to_string(csv.join("viber_summaries.csv")).unwrap();
    assert!(summaries.lines().any(|l| l.starts_with("+12025550101,2,90,")), "{summaries}");
    assert!(csv.join("timeline.csv").exists());

    assert_eq!(code(&imtriage(&["parse", s(&golden_tar()), "--out", s(&json)])), 0);
    let o = imtriage(&["report", s(&json), "--format", "text"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("msgstore.db"));
    let o = imtriage(&["report", s(&json), "--format", "json"]);
    assert!(o.stdout == fs::read(&json).unwrap());
}

#[test]
fn include_raw_adds_cells() {
    let o = imtriage(&["parse", s(&golden_tar()), "--include-raw"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"raw_cells\""));
}

#[test]
fn schema_map_override_is_reported() {
    let tmp = TempDir::new().unwrap();
    let map = tmp.path().join("map.txt");
    fs::write(&map, "whatsapp.messages.text = body, data\n").unwrap();
    let o = imtriage(&["parse", s(&golden_tar()), "--schema-map", s(&map)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("column messages.data (override fallback)"));
    fs::write(&map, "no.such.key = x\n").unwrap();
    assert_eq!(code(&imtriage(&["parse", s(&golden_tar()), "--schema-map", s(&map)])), 2);
}
