//! On-disk bundle layout.
//!
//! ```text
//! {bundle}/manifest.json           everything except images and stage exchanges
//! {bundle}/story.txt
//! {bundle}/scenes/scene_{i}.json
//! {bundle}/images/scene_{i}.png
//! {bundle}/log/stage_{kk}_{name}.json
//! ```
//!
//! The manifest lists the log files in stage order. Writing is deterministic:
//! the same bundle always produces the same bytes.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{SceneRecord, StageLogEntry, StoryBundle};
use crate::SCHEMA_VERSION;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Json { path: PathBuf, reason: String },
    #[error("unsupported schema_version {0}")]
    Schema(u32),
}

#[derive(Serialize)]
struct ManifestOut<'a> {
    #[serde(flatten)]
    bundle: &'a StoryBundle,
    stage_log: Vec<String>,
}

#[derive(Deserialize)]
struct ManifestIn {
    #[serde(flatten)]
    bundle: StoryBundle,
    #[serde(default)]
    stage_log: Vec<String>,
}

/// Name of the k-th (1-based) log file.
pub fn log_file_name(k: usize, entry: &StageLogEntry) -> String {
    match entry.scene {
        Some(s) => format!("stage_{k:02}_{}_scene{s}.json", entry.stage),
        None => format!("stage_{k:02}_{}.json", entry.stage),
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("bundle types serialize");
    s.push('\n');
    s
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.to_path_buf(), source }
}

fn write(path: &Path, contents: &str) -> Result<(), BundleError> {
    fs::write(path, contents).map_err(io_at(path))
}

/// Removes files in `dir` that are not in `keep`.
fn prune(dir: &Path, keep: &BTreeSet<String>) -> Result<(), BundleError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(BundleError::Io { path: dir.to_path_buf(), source: e }),
    };
    for entry in entries {
        let entry = entry.map_err(io_at(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.path().is_file() && !keep.contains(&name) {
            fs::remove_file(entry.path()).map_err(io_at(dir))?;
        }
    }
    Ok(())
}

/// Writes `bundle` into `dir`, replacing anything a previous run left there.
/// Image files are written by the pipeline; unreferenced ones are removed.
pub fn write_bundle(bundle: &StoryBundle, dir: &Path) -> Result<(), BundleError> {
    let scenes_dir = dir.join("scenes");
    let log_dir = dir.join("log");
    let images_dir = dir.join("images");
    for d in [dir, &scenes_dir, &log_dir] {
        fs::create_dir_all(d).map_err(io_at(d))?;
    }

    let log_names: Vec<String> =
        bundle.stage_log.iter().enumerate().map(|(i, e)| log_file_name(i + 1, e)).collect();
    write(&dir.join(MANIFEST), &pretty(&ManifestOut { bundle, stage_log: log_names.clone() }))?;

    let story_path = dir.join("story.txt");
    match &bundle.story {
        Some(story) => write(&story_path, &format!("{}\n", story.text))?,
        None => {
            if story_path.exists() {
                fs::remove_file(&story_path).map_err(io_at(&story_path))?;
            }
        }
    }

    let mut scene_names = BTreeSet::new();
    for (i, scene) in bundle.scenes.iter().enumerate() {
        let name = format!("scene_{}.json", i + 1);
        write(&scenes_dir.join(&name), &pretty(scene))?;
        scene_names.insert(name);
    }
    prune(&scenes_dir, &scene_names)?;

    for (name, entry) in log_names.iter().zip(&bundle.stage_log) {
        write(&log_dir.join(name), &pretty(entry))?;
    }
    prune(&log_dir, &log_names.iter().cloned().collect())?;

    let images: BTreeSet<String> = bundle
        .scenes
        .iter()
        .filter_map(|s| s.image_ref.as_deref())
        .filter_map(|r| r.strip_prefix("images/"))
        .map(str::to_string)
        .collect();
    prune(&images_dir, &images)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BundleError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    serde_json::from_str(&text).map_err(|e| BundleError::Json { path: path.to_path_buf(), reason: e.to_string() })
}

/// Reads a bundle back, including its stage log.
pub fn read_bundle(dir: &Path) -> Result<StoryBundle, BundleError> {
    let manifest: ManifestIn = read_json(&dir.join(MANIFEST))?;
    let mut bundle = manifest.bundle;
    if bundle.schema_version != SCHEMA_VERSION {
        return Err(BundleError::Schema(bundle.schema_version));
    }
    bundle.stage_log = manifest
        .stage_log
        .iter()
        .map(|name| read_json::<StageLogEntry>(&dir.join("log").join(name)))
        .collect::<Result<_, _>>()?;
    Ok(bundle)
}

/// Reads one scene file, as written next to the manifest.
pub fn read_scene(dir: &Path, index: usize) -> Result<SceneRecord, BundleError> {
    read_json(&dir.join("scenes").join(format!("scene_{index}.json")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::sample_bundle;
    use crate::domain::{validate_bundle_at, StageAttempt};

    fn with_log(mut b: StoryBundle) -> StoryBundle {
        b.stage_log = vec![
            StageLogEntry {
                stage: "culture_extraction".into(),
                scene: None,
                attempts: vec![StageAttempt {
                    request: serde_json::json!({"user": "u"}),
                    reply: Some(serde_json::json!("r")),
                    violations: vec![],
                    error: None,
                }],
            },
            StageLogEntry { stage: "scene_planning".into(), scene: Some(2), attempts: vec![] },
        ];
        b
    }

    #[test]
    fn round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let b = with_log(sample_bundle());
        write_bundle(&b, dir.path()).unwrap();
        assert!(dir.path().join("story.txt").is_file());
        assert!(dir.path().join("scenes/scene_4.json").is_file());
        assert!(dir.path().join("log/stage_01_culture_extraction.json").is_file());
        assert!(dir.path().join("log/stage_02_scene_planning_scene2.json").is_file());
        assert_eq!(read_bundle(dir.path()).unwrap(), b);
        assert_eq!(read_scene(dir.path(), 1).unwrap(), b.scenes[0]);
    }

    #[test]
    fn deterministic_bytes() {
        let a = tempfile::tempdir().unwrap();
        let c = tempfile::tempdir().unwrap();
        let b = with_log(sample_bundle());
        write_bundle(&b, a.path()).unwrap();
        write_bundle(&b, c.path()).unwrap();
        let m = |d: &Path| fs::read(d.join(MANIFEST)).unwrap();
        assert_eq!(m(a.path()), m(c.path()));
    }

    #[test]
    fn stale_files_removed() {
        let dir = tempfile::tempdir().unwrap();
        let b = with_log(sample_bundle());
        write_bundle(&b, dir.path()).unwrap();
        fs::create_dir_all(dir.path().join("images")).unwrap();
        fs::write(dir.path().join("images/scene_9.png"), b"x").unwrap();
        let mut shorter = b.clone();
        shorter.scenes.truncate(2);
        shorter.stage_log.truncate(1);
        write_bundle(&shorter, dir.path()).unwrap();
        assert!(!dir.path().join("scenes/scene_3.json").exists());
        assert!(!dir.path().join("log/stage_02_scene_planning_scene2.json").exists());
        assert!(!dir.path().join("images/scene_9.png").exists());
    }

    #[test]
    fn missing_image_is_a_violation() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = sample_bundle();
        b.settings.text_only = false;
        b.scenes[0].image_ref = Some("images/scene_1.png".into());
        write_bundle(&b, dir.path()).unwrap();
        let v = validate_bundle_at(&read_bundle(dir.path()).unwrap(), dir.path());
        assert!(v.iter().any(|v| v.rule.contains("image_ref missing")), "{v:?}");
    }
}
