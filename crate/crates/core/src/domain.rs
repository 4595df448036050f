//! Artifacts produced by a pipeline run and the rules they must satisfy.
//!
//! Values are plain data once built. Constructors check the per-type rules;
//! [`validate_bundle`] re-checks everything on a whole [`StoryBundle`], which is
//! how bundles loaded from disk are vetted.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grammar::{self, WeightedSegment};

/// Every crafted image prompt must end with this.
pub const MANDATORY_SUFFIX: &str = "masterpiece, sharp focus, highly detailed, cartoon";

/// Fixed negative prompt sent with every image request.
pub const NEGATIVE_PROMPT: &str = "EasyNegative, blurry, (bad prompt:0.8), (artist name, signature, watermark:1.4), (ugly:1.2), (worst quality, poor detail:1.4), (deformed iris, deformed pupils, semi-realistic, CGI, 3d, render, sketch, drawing, anime:1.4), text, cropped, out of frame, worst quality, low quality, jpeg artifacts, ugly, duplicate, morbid, mutilated, extra fingers, mutated hands, poorly drawn hands, poorly drawn face, mutation, deformed, blurry, dehydrated, bad anatomy, bad proportions, extra limbs, cloned face, disfigured, gross proportions, malformed limbs, missing arms, missing legs, extra arms, extra legs, fused fingers, too many fingers, long neck, lowres, error, worst quality, low quality, out of frame, username, NSFW";

pub const DEFAULT_WORD_LIMIT: usize = 500;
pub const SCENE_COUNT: usize = 4;
pub const CHARACTER_CAP: usize = 3;
pub const SCENE_CHARACTER_CAP: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{ty}.{field} must not be empty")]
    Empty { ty: &'static str, field: &'static str },
    #[error("character name {0:?} contains a newline")]
    NameNewline(String),
    #[error("scene index {0} outside 1..=4")]
    SceneIndex(usize),
    #[error("image prompt does not end with the mandatory suffix")]
    MissingSuffix,
    #[error("image prompt: {0}")]
    Grammar(#[from] grammar::GrammarError),
    #[error("invalid generation parameter: {0}")]
    Generation(String),
}

/// Counts maximal runs of non-whitespace characters.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryPrompt {
    pub id: String,
    pub text: String,
}

impl StoryPrompt {
    /// Builds a prompt whose id is derived from its text, so replays land in
    /// the same bundle directory.
    pub fn new(text: impl Into<String>) -> Result<Self, DomainError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DomainError::Empty { ty: "StoryPrompt", field: "text" });
        }
        let digest = Sha256::digest(text.as_bytes());
        let id = format!("p-{}", &hex_lower(&digest)[..12]);
        Ok(StoryPrompt { id, text })
    }
}

pub(crate) fn hex_lower(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CultureNotes {
    pub items: Vec<String>,
    pub source_prompt_id: String,
}

impl CultureNotes {
    pub fn empty(source_prompt_id: impl Into<String>) -> Self {
        CultureNotes { items: Vec::new(), source_prompt_id: source_prompt_id.into() }
    }

    /// Splits a model reply into one item per nonblank line.
    pub fn from_reply(reply: &str, source_prompt_id: impl Into<String>) -> Self {
        let items = reply
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        CultureNotes { items, source_prompt_id: source_prompt_id.into() }
    }

    pub fn render(&self) -> String {
        self.items.join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub text: String,
    pub word_count: usize,
    pub prompt_id: String,
    /// Whether the story met the configured word limit.
    pub length_ok: bool,
}

impl Story {
    pub fn new(text: impl Into<String>, prompt_id: impl Into<String>, word_limit: usize) -> Self {
        let text = text.into();
        let word_count = count_words(&text);
        Story { text, word_count, prompt_id: prompt_id.into(), length_ok: word_count <= word_limit }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterProfile {
    pub name: String,
    pub description: String,
}

impl CharacterProfile {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Result<Self, DomainError> {
        let name = name.into();
        let description = description.into();
        if name.trim().is_empty() {
            return Err(DomainError::Empty { ty: "CharacterProfile", field: "name" });
        }
        if name.contains('\n') {
            return Err(DomainError::NameNewline(name));
        }
        if description.trim().is_empty() {
            return Err(DomainError::Empty { ty: "CharacterProfile", field: "description" });
        }
        Ok(CharacterProfile { name, description })
    }
}

/// Finds the cast member a scene refers to, ignoring case.
pub fn find_in_cast<'a>(cast: &'a [CharacterProfile], name: &str) -> Option<&'a CharacterProfile> {
    cast.iter().find(|c| c.name.to_lowercase() == name.to_lowercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcRole {
    Introduction,
    Conflict,
    Climax,
    Conclusion,
}

impl ArcRole {
    pub const ALL: [ArcRole; 4] =
        [ArcRole::Introduction, ArcRole::Conflict, ArcRole::Climax, ArcRole::Conclusion];

    pub fn label(self) -> &'static str {
        match self {
            ArcRole::Introduction => "Introduction",
            ArcRole::Conflict => "Conflict",
            ArcRole::Climax => "Climax",
            ArcRole::Conclusion => "Conclusion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneContext {
    pub arc_role: ArcRole,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenePlan {
    pub narration: String,
    pub backdrop: String,
    /// Character name to pose and expression, in the order the model listed them.
    pub characters: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2IPrompt {
    pub positive: String,
    pub segments: Vec<WeightedSegment>,
    pub negative: String,
    pub scene_index: usize,
}

impl T2IPrompt {
    pub fn new(positive: impl Into<String>, scene_index: usize) -> Result<Self, DomainError> {
        let positive = positive.into();
        if !(1..=SCENE_COUNT).contains(&scene_index) {
            return Err(DomainError::SceneIndex(scene_index));
        }
        let segments = grammar::parse_t2i_prompt(&positive)?;
        if !positive.trim_end().ends_with(MANDATORY_SUFFIX) {
            return Err(DomainError::MissingSuffix);
        }
        Ok(T2IPrompt { positive, segments, negative: NEGATIVE_PROMPT.to_string(), scene_index })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub steps: u32,
    pub sampler_name: String,
    pub refiner_denoise: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub seed: Option<i64>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            steps: 50,
            sampler_name: "DPM++ 3M SDE Karras".to_string(),
            refiner_denoise: 0.5,
            width: 1024,
            height: 1024,
            seed: None,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.steps < 1 {
            return Err(DomainError::Generation("steps must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.refiner_denoise) {
            return Err(DomainError::Generation("refiner_denoise must lie in [0, 1]".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(DomainError::Generation("width and height must be positive".into()));
        }
        if self.sampler_name.trim().is_empty() {
            return Err(DomainError::Generation("sampler_name must not be empty".into()));
        }
        Ok(())
    }
}

/// One of the four scenes, filled in stage by stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub context: SceneContext,
    #[serde(default)]
    pub plan: Option<ScenePlan>,
    #[serde(default)]
    pub t2i: Option<T2IPrompt>,
    /// Path relative to the bundle directory.
    #[serde(default)]
    pub image_ref: Option<String>,
    /// Seed the image backend reported for this scene.
    #[serde(default)]
    pub image_seed: Option<i64>,
}

/// One request/reply exchange within a stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAttempt {
    pub request: serde_json::Value,
    #[serde(default)]
    pub reply: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLogEntry {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<usize>,
    pub attempts: Vec<StageAttempt>,
}

/// Limits in force for a run, persisted so a bundle can be validated against
/// what it was generated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSettings {
    pub word_limit: usize,
    pub scene_count: usize,
    pub char_cap: usize,
    pub scene_char_cap: usize,
    /// Set when the fixed caps were changed explicitly.
    pub caps_overridden: bool,
    pub text_only: bool,
    pub generation: GenerationParams,
}

impl Default for BundleSettings {
    fn default() -> Self {
        BundleSettings {
            word_limit: DEFAULT_WORD_LIMIT,
            scene_count: SCENE_COUNT,
            char_cap: CHARACTER_CAP,
            scene_char_cap: SCENE_CHARACTER_CAP,
            caps_overridden: false,
            text_only: false,
            generation: GenerationParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteMarker {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryBundle {
    pub schema_version: u32,
    pub prompt: StoryPrompt,
    pub settings: BundleSettings,
    pub culture: CultureNotes,
    #[serde(default)]
    pub story: Option<Story>,
    #[serde(default)]
    pub characters: Vec<CharacterProfile>,
    #[serde(default)]
    pub scenes: Vec<SceneRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<IncompleteMarker>,
    /// Persisted as separate files under `log/`.
    #[serde(skip)]
    pub stage_log: Vec<StageLogEntry>,
}

impl StoryBundle {
    pub fn new(prompt: StoryPrompt, settings: BundleSettings) -> Self {
        let culture = CultureNotes::empty(prompt.id.clone());
        StoryBundle {
            schema_version: crate::SCHEMA_VERSION,
            prompt,
            settings,
            culture,
            story: None,
            characters: Vec::new(),
            scenes: Vec::new(),
            incomplete: None,
            stage_log: Vec::new(),
        }
    }
}

/// A broken rule, named by type, field and rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub ty: &'static str,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(ty: &'static str, field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation { ty, field: field.into(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.ty, self.field, self.rule)
    }
}

/// Checks every invariant of a bundle except on-disk image presence.
pub fn validate_bundle(bundle: &StoryBundle) -> Vec<Violation> {
    let mut out = Vec::new();
    let s = &bundle.settings;

    if let Some(inc) = &bundle.incomplete {
        out.push(Violation::new(
            "StoryBundle",
            "incomplete",
            format!("run aborted at {}: {}", inc.stage, inc.reason),
        ));
    }
    if bundle.prompt.text.trim().is_empty() {
        out.push(Violation::new("StoryPrompt", "text", "empty after trimming"));
    }
    for (i, item) in bundle.culture.items.iter().enumerate() {
        if item.trim().is_empty() {
            out.push(Violation::new("CultureNotes", format!("items[{i}]"), "empty item"));
        }
    }
    if !s.caps_overridden
        && (s.scene_count != SCENE_COUNT
            || s.char_cap != CHARACTER_CAP
            || s.scene_char_cap != SCENE_CHARACTER_CAP)
    {
        out.push(Violation::new("BundleSettings", "caps", "fixed caps changed without override flag"));
    }

    match &bundle.story {
        None => out.push(Violation::new("StoryBundle", "story", "missing")),
        Some(story) => {
            let counted = count_words(&story.text);
            if story.word_count != counted {
                out.push(Violation::new(
                    "Story",
                    "word_count",
                    format!("recorded {} but text has {counted} words", story.word_count),
                ));
            }
            if story.length_ok && story.word_count > s.word_limit {
                out.push(Violation::new(
                    "Story",
                    "length_ok",
                    format!("set although {} > {} words", story.word_count, s.word_limit),
                ));
            }
            if story.text.trim().is_empty() {
                out.push(Violation::new("Story", "text", "empty"));
            }
        }
    }

    let n_chars = bundle.characters.len();
    if n_chars < 1 || n_chars > s.char_cap {
        out.push(Violation::new(
            "StoryBundle",
            "characters",
            format!("characters.size {n_chars} outside [1, {}]", s.char_cap),
        ));
    }
    for (i, c) in bundle.characters.iter().enumerate() {
        if let Err(e) = CharacterProfile::new(c.name.clone(), c.description.clone()) {
            out.push(Violation::new("CharacterProfile", format!("[{i}]"), e.to_string()));
        }
    }

    if bundle.scenes.len() != s.scene_count {
        out.push(Violation::new(
            "StoryBundle",
            "scenes",
            format!("scenes.size != {} (found {})", s.scene_count, bundle.scenes.len()),
        ));
    }
    for (i, scene) in bundle.scenes.iter().enumerate() {
        validate_scene(i, scene, bundle, &mut out);
    }
    out
}

fn validate_scene(i: usize, scene: &SceneRecord, bundle: &StoryBundle, out: &mut Vec<Violation>) {
    let n = i + 1;
    let s = &bundle.settings;
    if let Some(expected) = ArcRole::ALL.get(i) {
        if scene.context.arc_role != *expected {
            out.push(Violation::new(
                "SceneContext",
                format!("scene_{n}.arc_role"),
                format!("expected {} but found {}", expected.label(), scene.context.arc_role.label()),
            ));
        }
    }
    if scene.context.description.trim().is_empty() {
        out.push(Violation::new("SceneContext", format!("scene_{n}.description"), "empty"));
    }

    match &scene.plan {
        None => out.push(Violation::new("ScenePlan", format!("scene_{n}"), "missing")),
        Some(plan) => {
            if plan.narration.trim().is_empty() {
                out.push(Violation::new("ScenePlan", format!("scene_{n}.narration"), "empty"));
            }
            if plan.backdrop.trim().is_empty() {
                out.push(Violation::new("ScenePlan", format!("scene_{n}.backdrop"), "empty"));
            }
            if plan.characters.len() > s.scene_char_cap {
                out.push(Violation::new(
                    "ScenePlan",
                    format!("scene_{n}.characters"),
                    format!("{} characters exceed cap {}", plan.characters.len(), s.scene_char_cap),
                ));
            }
            for name in plan.characters.keys() {
                if find_in_cast(&bundle.characters, name).is_none() {
                    out.push(Violation::new(
                        "ScenePlan",
                        format!("scene_{n}.characters"),
                        format!("ScenePlan.characters unknown name {name:?}"),
                    ));
                }
            }
        }
    }

    match &scene.t2i {
        None => out.push(Violation::new("T2IPrompt", format!("scene_{n}"), "missing")),
        Some(t2i) => {
            if t2i.scene_index != n {
                out.push(Violation::new(
                    "T2IPrompt",
                    format!("scene_{n}.scene_index"),
                    format!("recorded {}", t2i.scene_index),
                ));
            }
            if !t2i.positive.trim_end().ends_with(MANDATORY_SUFFIX) {
                out.push(Violation::new("T2IPrompt", format!("scene_{n}.positive"), "missing mandatory suffix"));
            }
            if t2i.negative != NEGATIVE_PROMPT {
                out.push(Violation::new("T2IPrompt", format!("scene_{n}.negative"), "differs from the fixed negative prompt"));
            }
            match grammar::parse_t2i_prompt(&t2i.positive) {
                Err(e) => out.push(Violation::new("T2IPrompt", format!("scene_{n}.positive"), e.to_string())),
                Ok(segs) => {
                    if grammar::serialize_segments(&segs) != t2i.positive || segs != t2i.segments {
                        out.push(Violation::new(
                            "T2IPrompt",
                            format!("scene_{n}.segments"),
                            "segments do not round-trip to positive",
                        ));
                    }
                }
            }
        }
    }

    if s.text_only && scene.image_ref.is_some() {
        out.push(Violation::new("SceneRecord", format!("scene_{n}.image_ref"), "set in text-only run"));
    }
}

/// [`validate_bundle`] plus the check that every image reference exists under
/// `dir`.
pub fn validate_bundle_at(bundle: &StoryBundle, dir: &Path) -> Vec<Violation> {
    let mut out = validate_bundle(bundle);
    for (i, scene) in bundle.scenes.iter().enumerate() {
        if let Some(rel) = &scene.image_ref {
            let path = Path::new(rel);
            let escapes = path.is_absolute()
                || path.components().any(|c| matches!(c, std::path::Component::ParentDir));
            if escapes || !dir.join(path).is_file() {
                out.push(Violation::new(
                    "SceneRecord",
                    format!("scene_{}.image_ref", i + 1),
                    format!("image_ref missing: {rel}"),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn sample_bundle() -> StoryBundle {
        let prompt = StoryPrompt::new("Preeti explores Dalhousie.").unwrap();
        let mut b = StoryBundle::new(prompt.clone(), BundleSettings { text_only: true, ..Default::default() });
        b.culture = CultureNotes::from_reply("Dalhousie: a hill station", prompt.id.clone());
        b.story = Some(Story::new("Preeti and Arjun walked.", prompt.id.clone(), 500));
        b.characters = vec![
            CharacterProfile::new("Preeti", "A 10-year-old girl from Dalhousie").unwrap(),
            CharacterProfile::new("Arjun", "A boy of 11 from Dalhousie").unwrap(),
        ];
        b.scenes = ArcRole::ALL
            .iter()
            .enumerate()
            .map(|(i, role)| {
                let mut characters = IndexMap::new();
                characters.insert("preeti".to_string(), "walking, <happy>".to_string());
                SceneRecord {
                    context: SceneContext { arc_role: *role, description: format!("scene {i}") },
                    plan: Some(ScenePlan {
                        narration: "n".into(),
                        backdrop: "b".into(),
                        characters,
                    }),
                    t2i: Some(
                        T2IPrompt::new(format!("Girl, ((Girl walking:1.2)), {MANDATORY_SUFFIX}"), i + 1)
                            .unwrap(),
                    ),
                    image_ref: None,
                    image_seed: None,
                }
            })
            .collect();
        b
    }

    #[test]
    fn word_counts() {
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words("a  b\nc"), 3);
        assert_eq!(count_words("  \t\n "), 0);
    }

    #[test]
    fn prompt_rejects_blank() {
        assert!(StoryPrompt::new("   \n").is_err());
        let a = StoryPrompt::new("x").unwrap();
        assert_eq!(a, StoryPrompt::new("x").unwrap());
        assert!(a.id.starts_with("p-"));
    }

    #[test]
    fn character_rules() {
        assert!(CharacterProfile::new("A\nB", "d").is_err());
        assert!(CharacterProfile::new("A", " ").is_err());
        assert!(CharacterProfile::new("Ramu Mama", "elderly man").is_ok());
    }

    #[test]
    fn t2i_requires_suffix() {
        assert_eq!(T2IPrompt::new("boy running", 1), Err(DomainError::MissingSuffix));
        assert!(matches!(T2IPrompt::new(MANDATORY_SUFFIX, 5), Err(DomainError::SceneIndex(5))));
        let p = T2IPrompt::new(MANDATORY_SUFFIX, 1).unwrap();
        assert_eq!(p.negative, NEGATIVE_PROMPT);
    }

    #[test]
    fn negative_prompt_is_grammatical() {
        let segs = grammar::parse_t2i_prompt(NEGATIVE_PROMPT).unwrap();
        assert_eq!(grammar::serialize_segments(&segs), NEGATIVE_PROMPT);
        assert_eq!(segs[2].text, "bad prompt");
        assert_eq!(segs[2].weight, 0.8);
    }

    #[test]
    fn generation_defaults() {
        let g = GenerationParams::default();
        assert_eq!(g.steps, 50);
        assert_eq!(g.sampler_name, "DPM++ 3M SDE Karras");
        assert_eq!(g.refiner_denoise, 0.5);
        assert!(g.validate().is_ok());
        assert!(GenerationParams { steps: 0, ..g.clone() }.validate().is_err());
        assert!(GenerationParams { refiner_denoise: 1.5, ..g }.validate().is_err());
    }

    #[test]
    fn valid_bundle_has_no_violations() {
        assert_eq!(validate_bundle(&sample_bundle()), vec![]);
    }

    #[test]
    fn three_scenes_flagged() {
        let mut b = sample_bundle();
        b.scenes.pop();
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("scenes.size != 4"), "{}", v[0]);
    }

    #[test]
    fn unknown_scene_character_flagged() {
        let mut b = sample_bundle();
        b.scenes[1]
            .plan
            .as_mut()
            .unwrap()
            .characters
            .insert("Ravi".into(), "running".into());
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("ScenePlan.characters unknown name"));
    }

    #[test]
    fn arc_order_and_idempotence() {
        let mut b = sample_bundle();
        b.scenes.swap(0, 1);
        let first = validate_bundle(&b);
        assert!(first.iter().any(|v| v.field == "scene_1.arc_role"));
        assert_eq!(first, validate_bundle(&b));
    }

    #[test]
    fn length_flag_consistency() {
        let mut b = sample_bundle();
        let story = b.story.as_mut().unwrap();
        story.length_ok = true;
        story.word_count = 600;
        let v = validate_bundle(&b);
        assert!(v.iter().any(|v| v.field == "word_count"));
        assert!(v.iter().any(|v| v.field == "length_ok"));

        let long = "w ".repeat(501);
        let mut b = sample_bundle();
        b.story = Some(Story::new(long, b.prompt.id.clone(), 500));
        assert!(!b.story.as_ref().unwrap().length_ok);
        assert_eq!(validate_bundle(&b), vec![]);
    }

    #[test]
    fn missing_image_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = sample_bundle();
        b.settings.text_only = false;
        b.scenes[0].image_ref = Some("images/scene_1.png".into());
        let v = validate_bundle_at(&b, dir.path());
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("image_ref missing"));
        std::fs::create_dir_all(dir.path().join("images")).unwrap();
        std::fs::write(dir.path().join("images/scene_1.png"), b"x").unwrap();
        assert!(validate_bundle_at(&b, dir.path()).is_empty());
        b.scenes[0].image_ref = Some("../scene_1.png".into());
        assert_eq!(validate_bundle_at(&b, dir.path()).len(), 1);
    }
}
