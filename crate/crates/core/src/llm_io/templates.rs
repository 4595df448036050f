use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SYSTEM_MARKER: &str = "---SYSTEM---\n";
const USER_MARKER: &str = "\n---USER---\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    CultureExtraction,
    StoryWriting,
    CharacterExtraction,
    SceneSegmentation,
    ScenePlanning,
    T2iCrafting,
}

impl StageId {
    pub const ALL: [StageId; 6] = [
        StageId::CultureExtraction,
        StageId::StoryWriting,
        StageId::CharacterExtraction,
        StageId::SceneSegmentation,
        StageId::ScenePlanning,
        StageId::T2iCrafting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageId::CultureExtraction => "culture_extraction",
            StageId::StoryWriting => "story_writing",
            StageId::CharacterExtraction => "character_extraction",
            StageId::SceneSegmentation => "scene_segmentation",
            StageId::ScenePlanning => "scene_planning",
            StageId::T2iCrafting => "t2i_crafting",
        }
    }

    fn builtin_text(self) -> &'static str {
        match self {
            StageId::CultureExtraction => include_str!("../../templates/culture_extraction.txt"),
            StageId::StoryWriting => include_str!("../../templates/story_writing.txt"),
            StageId::CharacterExtraction => include_str!("../../templates/character_extraction.txt"),
            StageId::SceneSegmentation => include_str!("../../templates/scene_segmentation.txt"),
            StageId::ScenePlanning => include_str!("../../templates/scene_planning.txt"),
            StageId::T2iCrafting => include_str!("../../templates/t2i_crafting.txt"),
        }
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing template variable {0:?}")]
    MissingVariable(String),
    #[error("template for {stage} is malformed: {reason}")]
    Malformed { stage: StageId, reason: String },
    #[error("reading template {path}: {reason}")]
    Io { path: String, reason: String },
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("placeholder pattern"))
}

fn placeholders(text: &str) -> impl Iterator<Item = &str> {
    placeholder_re().captures_iter(text).map(|c| c.get(1).map_or("", |m| m.as_str()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub stage_id: StageId,
    pub system_template: String,
    pub user_template: String,
    pub required_vars: BTreeSet<String>,
}

impl PromptTemplate {
    /// Parses a template file with `---SYSTEM---` and `---USER---` sections.
    pub fn parse(stage_id: StageId, text: &str) -> Result<Self, TemplateError> {
        let malformed = |reason: &str| TemplateError::Malformed { stage: stage_id, reason: reason.into() };
        let body = text
            .strip_prefix(SYSTEM_MARKER)
            .ok_or_else(|| malformed("must start with ---SYSTEM---"))?;
        let (system, user) = body
            .split_once(USER_MARKER)
            .ok_or_else(|| malformed("missing ---USER--- section"))?;
        let user = user.strip_suffix('\n').unwrap_or(user);
        if user.contains(USER_MARKER.trim()) || system.contains(SYSTEM_MARKER.trim()) {
            return Err(malformed("duplicate section marker"));
        }
        Ok(Self::new(stage_id, system, user))
    }

    pub fn new(stage_id: StageId, system: impl Into<String>, user: impl Into<String>) -> Self {
        let system_template = system.into();
        let user_template = user.into();
        let required_vars = placeholders(&system_template)
            .chain(placeholders(&user_template))
            .map(str::to_string)
            .collect();
        PromptTemplate { stage_id, system_template, user_template, required_vars }
    }

    pub fn render(&self, vars: &[(&str, &str)]) -> Result<RenderedPrompt, TemplateError> {
        render_template(self, vars)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
    pub stage_id: StageId,
}

/// Substitutes every `{name}` placeholder in one pass; substituted values are
/// never rescanned and other braces are left alone.
pub fn render_template(template: &PromptTemplate, vars: &[(&str, &str)]) -> Result<RenderedPrompt, TemplateError> {
    let lookup = |name: &str| vars.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
    if let Some(missing) = template.required_vars.iter().find(|v| lookup(v).is_none()) {
        return Err(TemplateError::MissingVariable(missing.clone()));
    }
    let fill = |text: &str| {
        placeholder_re()
            .replace_all(text, |caps: &regex::Captures<'_>| lookup(&caps[1]).unwrap_or("").to_string())
            .into_owned()
    };
    Ok(RenderedPrompt {
        system: fill(&template.system_template),
        user: fill(&template.user_template),
        stage_id: template.stage_id,
    })
}

/// One template per stage, read-only once built.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: Vec<PromptTemplate>,
}

impl TemplateRegistry {
    /// The templates compiled into the binary from `templates/`.
    pub fn builtin() -> &'static TemplateRegistry {
        static REG: OnceLock<TemplateRegistry> = OnceLock::new();
        REG.get_or_init(|| {
            let templates = StageId::ALL
                .iter()
                .map(|&s| PromptTemplate::parse(s, s.builtin_text()).expect("builtin template parses"))
                .collect();
            TemplateRegistry { templates }
        })
    }

    /// Loads `{stage_id}.txt` for every stage from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let templates = StageId::ALL
            .iter()
            .map(|&stage| {
                let path = dir.join(format!("{}.txt", stage.as_str()));
                let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                PromptTemplate::parse(stage, &text)
            })
            .collect::<Result<_, _>>()?;
        Ok(TemplateRegistry { templates })
    }

    pub fn get(&self, stage: StageId) -> &PromptTemplate {
        self.templates
            .iter()
            .find(|t| t.stage_id == stage)
            .expect("registry holds every stage")
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.iter()
    }

    /// Which stage a rendered system message came from, judged by the literal
    /// text before its first placeholder.
    pub fn identify(&self, system: &str) -> Option<StageId> {
        self.templates.iter().find_map(|t| {
            let head = match placeholder_re().find(&t.system_template) {
                Some(m) => &t.system_template[..m.start()],
                None => &t.system_template,
            };
            system.starts_with(head).then_some(t.stage_id)
        })
    }
}
