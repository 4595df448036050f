//! Annotation dataset: ratings and highlighted spans per participant, story
//! and tool, plus expert reference highlights per story.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiCategory {
    Ecology,
    PublicLife,
    SocialLife,
    PersonalLife,
    CustomsAndPursuits,
    PrivatePassions,
    ProperNouns,
}

impl CsiCategory {
    pub const ALL: [CsiCategory; 7] = [
        CsiCategory::Ecology,
        CsiCategory::PublicLife,
        CsiCategory::SocialLife,
        CsiCategory::PersonalLife,
        CsiCategory::CustomsAndPursuits,
        CsiCategory::PrivatePassions,
        CsiCategory::ProperNouns,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CsiCategory::Ecology => "ecology",
            CsiCategory::PublicLife => "public_life",
            CsiCategory::SocialLife => "social_life",
            CsiCategory::PersonalLife => "personal_life",
            CsiCategory::CustomsAndPursuits => "customs_and_pursuits",
            CsiCategory::PrivatePassions => "private_passions",
            CsiCategory::ProperNouns => "proper_nouns",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for CsiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSpan {
    pub text: String,
    pub category: CsiCategory,
    /// +1 culturally appropriate, 0 generic, -1 inappropriate.
    pub severity: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

/// Seven 1..5 ratings. Only five of them enter the composite score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertRating {
    pub cultural_nuance: u8,
    pub culture_specific_words: u8,
    pub plot: u8,
    pub scene_selection: u8,
    pub image_consistency: u8,
    pub character_depiction: u8,
    pub cultural_accuracy: u8,
}

impl LikertRating {
    pub const METRICS: [&'static str; 7] = [
        "cultural_nuance",
        "culture_specific_words",
        "plot",
        "scene_selection",
        "image_consistency",
        "character_depiction",
        "cultural_accuracy",
    ];

    pub fn get(&self, metric: &str) -> Option<u8> {
        Some(match metric {
            "cultural_nuance" => self.cultural_nuance,
            "culture_specific_words" => self.culture_specific_words,
            "plot" => self.plot,
            "scene_selection" => self.scene_selection,
            "image_consistency" => self.image_consistency,
            "character_depiction" => self.character_depiction,
            "cultural_accuracy" => self.cultural_accuracy,
            _ => return None,
        })
    }

    pub fn uniform(v: u8) -> Self {
        LikertRating {
            cultural_nuance: v,
            culture_specific_words: v,
            plot: v,
            scene_selection: v,
            image_consistency: v,
            character_depiction: v,
            cultural_accuracy: v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub participant_id: String,
    pub story_id: String,
    pub tool_id: String,
    pub ratings: LikertRating,
    #[serde(default)]
    pub spans: Vec<AnnotationSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSpan {
    pub text: String,
    pub category: CsiCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceHighlights {
    pub story_id: String,
    pub spans: Vec<ReferenceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub records: Vec<AnnotationRecord>,
    #[serde(default)]
    pub references: Vec<ReferenceHighlights>,
}

impl Dataset {
    pub fn new(records: Vec<AnnotationRecord>, references: Vec<ReferenceHighlights>) -> Self {
        Dataset { schema_version: SCHEMA_VERSION, records, references }
    }

    pub fn reference(&self, story_id: &str) -> Option<&ReferenceHighlights> {
        self.references.iter().find(|r| r.story_id == story_id)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("dataset is not valid JSON: {0}")]
    Json(String),
    #[error("dataset has {} schema violation(s)", .0.len())]
    Schema(Vec<String>),
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_dataset(&text)
}

/// Parses and validates a dataset, collecting every violation rather than
/// stopping at the first.
pub fn parse_dataset(text: &str) -> Result<Dataset, DatasetError> {
    let root: Value = serde_json::from_str(text).map_err(|e| DatasetError::Json(e.to_string()))?;
    let mut v = Violations::default();

    match root.get("schema_version").and_then(Value::as_u64) {
        Some(n) if n == u64::from(SCHEMA_VERSION) => {}
        Some(n) => v.push("schema_version", format!("unsupported version {n}")),
        None => v.push("schema_version", "missing or not an integer"),
    }

    let mut records = Vec::new();
    match root.get("records").and_then(Value::as_array) {
        None => v.push("records", "missing or not a list"),
        Some(items) => {
            let mut seen = HashSet::new();
            for (i, item) in items.iter().enumerate() {
                let at = format!("records[{i}]");
                if let Some(rec) = record(item, &at, &mut v) {
                    let key = (rec.participant_id.clone(), rec.story_id.clone(), rec.tool_id.clone());
                    if !seen.insert(key) {
                        v.push(&at, format!(
                            "duplicate (participant_id, story_id, tool_id) = ({}, {}, {})",
                            rec.participant_id, rec.story_id, rec.tool_id
                        ));
                    }
                    records.push(rec);
                }
            }
        }
    }

    let mut references = Vec::new();
    match root.get("references") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            let mut seen = HashSet::new();
            for (i, item) in items.iter().enumerate() {
                let at = format!("references[{i}]");
                if let Some(r) = reference(item, &at, &mut v) {
                    if !seen.insert(r.story_id.clone()) {
                        v.push(&at, format!("duplicate reference for story {}", r.story_id));
                    }
                    references.push(r);
                }
            }
        }
        Some(_) => v.push("references", "not a list"),
    }

    if v.0.is_empty() {
        Ok(Dataset::new(records, references))
    } else {
        Err(DatasetError::Schema(v.0))
    }
}

#[derive(Default)]
struct Violations(Vec<String>);

impl Violations {
    fn push(&mut self, at: &str, msg: impl Into<String>) {
        self.0.push(format!("{at}: {}", msg.into()));
    }
}

fn string_field(item: &Value, key: &str, at: &str, v: &mut Violations) -> Option<String> {
    match item.get(key).and_then(Value::as_str) {
        Some(s) if !s.trim().is_empty() => Some(s.to_string()),
        _ => {
            v.push(at, format!("{key} missing or empty"));
            None
        }
    }
}

fn category(item: &Value, at: &str, v: &mut Violations) -> Option<CsiCategory> {
    let raw = item.get("category").and_then(Value::as_str);
    let parsed = raw.and_then(CsiCategory::parse);
    if parsed.is_none() {
        v.push(at, format!("category {} not one of the seven CSI categories", raw.unwrap_or("<missing>")));
    }
    parsed
}

fn record(item: &Value, at: &str, v: &mut Violations) -> Option<AnnotationRecord> {
    let before = v.0.len();
    let participant_id = string_field(item, "participant_id", at, v);
    let story_id = string_field(item, "story_id", at, v);
    let tool_id = string_field(item, "tool_id", at, v);

    let mut scores = [0u8; 7];
    match item.get("ratings").and_then(Value::as_object) {
        None => v.push(at, "ratings missing or not an object"),
        Some(map) => {
            for (slot, metric) in scores.iter_mut().zip(LikertRating::METRICS) {
                match map.get(metric).and_then(Value::as_i64) {
                    Some(x @ 1..=5) => *slot = x as u8,
                    Some(x) => v.push(&format!("{at}.ratings.{metric}"), format!("{x} outside 1..5")),
                    None => v.push(&format!("{at}.ratings.{metric}"), "missing or not an integer"),
                }
            }
            for key in map.keys().filter(|k| !LikertRating::METRICS.contains(&k.as_str())) {
                v.push(&format!("{at}.ratings"), format!("unknown rating {key:?}"));
            }
        }
    }

    let mut spans = Vec::new();
    match item.get("spans") {
        None | Some(Value::Null) => {}
        Some(Value::Array(items)) => {
            for (j, s) in items.iter().enumerate() {
                let sat = format!("{at}.spans[{j}]");
                let text = string_field(s, "text", &sat, v);
                let cat = category(s, &sat, v);
                let severity = match s.get("severity").and_then(Value::as_i64) {
                    Some(x @ -1..=1) => Some(x as i8),
                    Some(x) => {
                        v.push(&sat, format!("severity {x} not in {{-1, 0, 1}}"));
                        None
                    }
                    None => {
                        v.push(&sat, "severity missing or not an integer");
                        None
                    }
                };
                let comment = s.get("comment").and_then(Value::as_str).map(str::to_string);
                if let (Some(text), Some(category), Some(severity)) = (text, cat, severity) {
                    spans.push(AnnotationSpan { text, category, severity, comment });
                }
            }
        }
        Some(_) => v.push(at, "spans is not a list"),
    }

    if v.0.len() > before {
        return None;
    }
    let [cultural_nuance, culture_specific_words, plot, scene_selection, image_consistency, character_depiction, cultural_accuracy] =
        scores;
    Some(AnnotationRecord {
        participant_id: participant_id?,
        story_id: story_id?,
        tool_id: tool_id?,
        ratings: LikertRating {
            cultural_nuance,
            culture_specific_words,
            plot,
            scene_selection,
            image_consistency,
            character_depiction,
            cultural_accuracy,
        },
        spans,
    })
}

fn reference(item: &Value, at: &str, v: &mut Violations) -> Option<ReferenceHighlights> {
    let before = v.0.len();
    let story_id = string_field(item, "story_id", at, v);
    let mut spans = Vec::new();
    match item.get("spans").and_then(Value::as_array) {
        Some(items) if !items.is_empty() => {
            for (j, s) in items.iter().enumerate() {
                let sat = format!("{at}.spans[{j}]");
                if let (Some(text), Some(category)) = (string_field(s, "text", &sat, v), category(s, &sat, v)) {
                    spans.push(ReferenceSpan { text, category });
                }
            }
        }
        _ => v.push(at, "spans missing or empty"),
    }
    if v.0.len() > before {
        return None;
    }
    Some(ReferenceHighlights { story_id: story_id?, spans })
}
