//! Scripted replies for the Dalhousie story, used to record and check the
//! checked-in fixture set.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use storyforge::clients::mock::{stage_of, MockImages, ScriptedChat};
use storyforge::clients::{ClientError, FixtureMode, FixtureStore, Fixtured};
use storyforge::domain::StoryPrompt;
use storyforge::llm_io::StageId;
use storyforge::pipeline::{run_pipeline, PipelineConfig, PipelineRun};

pub fn source_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/preeti-source")
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/preeti")
}

fn read(name: &str) -> String {
    let path = source_dir().join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn prompt_text() -> String {
    read("prompt.txt").trim().to_string()
}

pub fn prompt() -> StoryPrompt {
    StoryPrompt::new(prompt_text()).expect("fixture prompt is valid")
}

/// A chat backend answering every stage with the transcribed outputs.
pub fn scripted_chat() -> ScriptedChat {
    let culture = read("culture.txt");
    let story = read("story.txt").trim().to_string();
    let characters = read("characters.txt");
    let scenes = read("scenes.txt");
    let contexts: Vec<String> = serde_json::from_str(&scenes).expect("scenes.txt is a JSON list");
    let plans: Vec<String> = (1..=4).map(|i| read(&format!("plan_{i}.txt"))).collect();
    let narrations: Vec<String> = plans
        .iter()
        .map(|p| {
            let v: serde_json::Value = serde_json::from_str(p).expect("plan is JSON");
            v["narration"].as_str().expect("plan has narration").to_string()
        })
        .collect();
    let prompts: Vec<String> = (1..=4).map(|i| read(&format!("t2i_{i}.txt")).trim().to_string()).collect();

    ScriptedChat::from_fn(move |req| {
        let rendered = format!("{}\n{}", req.system, req.user);
        let pick = |needles: &[String], replies: &[String]| {
            needles
                .iter()
                .position(|n| rendered.contains(n.as_str()))
                .map(|i| replies[i].clone())
                .ok_or_else(|| ClientError::Backend { status: None, excerpt: "no scripted reply".into() })
        };
        match stage_of(req) {
            Some(StageId::CultureExtraction) => Ok(culture.clone()),
            Some(StageId::StoryWriting) => Ok(story.clone()),
            Some(StageId::CharacterExtraction) => Ok(characters.clone()),
            Some(StageId::SceneSegmentation) => Ok(scenes.clone()),
            Some(StageId::ScenePlanning) => pick(&contexts, &plans),
            Some(StageId::T2iCrafting) => pick(&narrations, &prompts),
            None => Err(ClientError::Backend { status: None, excerpt: "unknown stage".into() }),
        }
    })
}

/// Runs the pipeline against the scripted backends, recording every exchange
/// into `fixtures`. The bundle lands under `out`.
pub fn record(fixtures: &Path, out: &Path) -> PipelineRun {
    let store = FixtureStore::new(fixtures, FixtureMode::Record);
    let chat = Fixtured::new(scripted_chat(), store.clone());
    let images = Fixtured::new(MockImages::default(), store);
    let cfg = PipelineConfig::default();
    run_pipeline(&prompt(), &cfg, &chat, Some(&images), out).expect("scripted run succeeds")
}
