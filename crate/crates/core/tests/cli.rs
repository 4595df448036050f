mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::preeti;

fn storyforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_storyforge")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Replays the Preeti fixtures into `out` and returns the bundle directory.
fn generate(out: &Path, extra: &[&str]) -> std::path::PathBuf {
    let fixtures = preeti::fixture_dir();
    let prompt = fixtures.join("prompt.txt");
    let mut args = vec!["generate", "--prompt-file", s(&prompt), "--fixtures", s(&fixtures), "--out", s(out)];
    args.extend_from_slice(extra);
    let o = storyforge(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = std::path::PathBuf::from(stdout(&o).trim());
    assert!(dir.join("manifest.json").is_file());
    dir
}

#[test]
fn generate_on_fixtures_then_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = generate(tmp.path(), &[]);
    let o = storyforge(&["validate", s(&dir)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "OK");
}

#[test]
fn replay_subcommand_matches_generate() {
    let tmp = tempfile::tempdir().unwrap();
    let a = generate(&tmp.path().join("a"), &[]);
    let fixtures = preeti::fixture_dir();
    let prompt = fixtures.join("prompt.txt");
    let out = tmp.path().join("b");
    let o = storyforge(&["replay", "--prompt-file", s(&prompt), "--fixtures", s(&fixtures), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let b = std::path::PathBuf::from(stdout(&o).trim());
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = storyforge(&["generate", "--prompt", "A story about a kite."]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing config"));
    assert_eq!(storyforge(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(storyforge(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"schema_version":1,"pipeline":{"scene_count":5}}"#).unwrap();
    let o = storyforge(&["generate", "--prompt", "x", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn fixture_miss_exits_one_with_partial_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = tmp.path().join("fixtures");
    common::copy_dir(&preeti::fixture_dir(), &fixtures);
    let reply = fs::read_to_string(preeti::source_dir().join("t2i_3.txt")).unwrap();
    common::drop_fixture_with_reply(&fixtures, &reply);
    let out = tmp.path().join("runs");
    let prompt = fixtures.join("prompt.txt");
    let o = storyforge(&["generate", "--prompt-file", s(&prompt), "--fixtures", s(&fixtures), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("partial bundle"));
    let dir = out.join(&preeti::prompt().id);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["incomplete"]["stage"], "t2i_crafting");
    assert_eq!(storyforge(&["validate", s(&dir)]).status.code(), Some(1));
}

#[test]
fn tampered_manifest_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = generate(tmp.path(), &[]);
    let path = dir.join("manifest.json");
    let mut manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    manifest["scenes"].as_array_mut().unwrap().pop();
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    let o = storyforge(&["validate", s(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("scenes.size != 4"), "{}", stdout(&o));

    let report = tmp.path().join("r.html");
    assert_eq!(storyforge(&["report", s(&dir), "--out", s(&report)]).status.code(), Some(1));
    assert!(!report.exists());
}

#[test]
fn missing_image_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = generate(tmp.path(), &[]);
    fs::remove_file(dir.join("images/scene_2.png")).unwrap();
    let o = storyforge(&["validate", s(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("image_ref missing"), "{}", stdout(&o));
}

#[test]
fn report_embeds_four_images_and_the_story() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = generate(tmp.path(), &[]);
    let report = tmp.path().join("out/report.html");
    let o = storyforge(&["report", s(&dir), "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let html = fs::read_to_string(&report).unwrap();
    assert_eq!(html.matches("<img").count(), 4);
    assert!(html.contains("In the heart of Dalhousie"));
}

#[test]
fn text_only_report_uses_placeholders() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = generate(tmp.path(), &["--text-only"]);
    assert!(!dir.join("images").exists());
    let report = tmp.path().join("report.html");
    let o = storyforge(&["report", s(&dir), "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let html = fs::read_to_string(&report).unwrap();
    assert_eq!(html.matches("<img").count(), 0);
    assert!(html.contains("placeholder"));
}

fn dataset() -> std::path::PathBuf {
    common::synthetic::dataset_path()
}

#[test]
fn eval_composite_has_table_two_columns() {
    let o = storyforge(&["eval", "--dataset", s(&dataset()), "--metric", "composite"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "story_id,tool_id,count,mean,std");
    assert_eq!(out.lines().count(), 5);
}

#[test]
fn eval_wilcoxon_has_seven_rows() {
    let o = storyforge(&["eval", "--dataset", s(&dataset()), "--metric", "wilcoxon"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    for col in ["metric", "W", "Z", "p"] {
        assert!(header.iter().any(|h| h == col), "{header:?}");
    }
    assert_eq!(r.records().count(), 7);
}

#[test]
fn eval_all_writes_every_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tables");
    let o = storyforge(&["eval", "--dataset", s(&dataset()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in ["composite.csv", "refbased.csv", "csi.csv", "wilcoxon.csv", "summary.txt"] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn eval_rejects_bad_severity() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(dataset()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["records"][0]["spans"][0]["severity"] = 2.into();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, v.to_string()).unwrap();
    let o = storyforge(&["eval", "--dataset", s(&bad), "--metric", "csi"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("severity 2"), "{}", stderr(&o));
}
