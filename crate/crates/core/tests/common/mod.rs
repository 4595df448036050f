#![allow(dead_code)]

pub mod gen;
pub mod preeti;
pub mod synthetic;

use std::fs;
use std::path::Path;

use storyforge::clients::{FixtureMode, FixtureStore, Fixtured, Offline};

pub fn replay_store(dir: &Path) -> FixtureStore {
    FixtureStore::new(dir, FixtureMode::Replay)
}

/// Chat and image backends that can only answer from `dir`.
pub fn replay_backends(dir: &Path) -> (Fixtured<Offline>, Fixtured<Offline>) {
    (Fixtured::new(Offline, replay_store(dir)), Fixtured::new(Offline, replay_store(dir)))
}

pub fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Removes the recorded chat fixture whose reply equals `reply`.
pub fn drop_fixture_with_reply(dir: &Path, reply: &str) {
    let mut removed = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            if v["reply"].as_str().map(str::trim) == Some(reply.trim()) {
                fs::remove_file(&path).unwrap();
                removed += 1;
            }
        }
    }
    assert_eq!(removed, 1, "expected exactly one fixture with that reply");
}
