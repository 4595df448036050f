use indexmap::IndexMap;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::domain::{
    find_in_cast, ArcRole, CharacterProfile, SceneContext, ScenePlan, CHARACTER_CAP, SCENE_CHARACTER_CAP,
    SCENE_COUNT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    InvalidJson(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{0} characters returned, above the cast cap")]
    TooManyCharacters(usize),
    #[error("scene names character {0:?} who is not in the cast")]
    UnknownCharacter(String),
    #[error("{0} characters in one scene, above the per-scene cap")]
    TooManyInScene(usize),
}

fn parse_value(json_text: &str) -> Result<Value, ParseError> {
    serde_json::from_str(json_text).map_err(|e| ParseError::InvalidJson(e.to_string()))
}

fn schema(msg: impl Into<String>) -> ParseError {
    ParseError::SchemaMismatch(msg.into())
}

/// Parses the character list, keeping model order.
pub fn parse_characters(json_text: &str) -> Result<Vec<CharacterProfile>, ParseError> {
    parse_characters_capped(json_text, CHARACTER_CAP)
}

/// [`parse_characters`] with an explicit cast cap.
pub fn parse_characters_capped(json_text: &str, cap: usize) -> Result<Vec<CharacterProfile>, ParseError> {
    let value = parse_value(json_text)?;
    let items = value.as_array().ok_or_else(|| schema("expected a JSON list of characters"))?;
    if items.is_empty() {
        return Err(schema("character list is empty"));
    }
    if items.len() > cap {
        return Err(ParseError::TooManyCharacters(items.len()));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let field = |key: &str| {
                item.get(key)
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema(format!("character {i} lacks string field {key:?}")))
            };
            CharacterProfile::new(field("name")?.trim(), field("description")?.trim())
                .map_err(|e| schema(format!("character {i}: {e}")))
        })
        .collect()
}

/// Parses the four scene descriptions, assigning arc roles by position.
pub fn parse_scene_list(json_text: &str) -> Result<Vec<SceneContext>, ParseError> {
    let value = parse_value(json_text)?;
    let items = value.as_array().ok_or_else(|| schema("expected a JSON list of scenes"))?;
    if items.len() != SCENE_COUNT {
        return Err(schema(format!("expected {SCENE_COUNT} scenes, got {}", items.len())));
    }
    items
        .iter()
        .zip(ArcRole::ALL)
        .enumerate()
        .map(|(i, (item, arc_role))| {
            let description = item
                .as_str()
                .ok_or_else(|| schema(format!("scene {} is not a string", i + 1)))?;
            if description.trim().is_empty() {
                return Err(schema(format!("scene {} is empty", i + 1)));
            }
            Ok(SceneContext { arc_role, description: description.to_string() })
        })
        .collect()
}

#[derive(Deserialize)]
struct RawPlan {
    narration: String,
    backdrop: String,
    #[serde(default)]
    characters: IndexMap<String, String>,
}

/// Parses one scene plan and checks its characters against the cast.
pub fn parse_scene_plan(json_text: &str, cast: &[CharacterProfile]) -> Result<ScenePlan, ParseError> {
    parse_scene_plan_capped(json_text, cast, SCENE_CHARACTER_CAP)
}

/// [`parse_scene_plan`] with an explicit per-scene cap.
pub fn parse_scene_plan_capped(json_text: &str, cast: &[CharacterProfile], cap: usize) -> Result<ScenePlan, ParseError> {
    let value = parse_value(json_text)?;
    if !value.is_object() {
        return Err(schema("expected a JSON object"));
    }
    // Deserialize from text so the character map keeps source order.
    let raw: RawPlan = serde_json::from_str(json_text).map_err(|e| schema(e.to_string()))?;
    if raw.narration.trim().is_empty() {
        return Err(schema("narration is empty"));
    }
    if raw.backdrop.trim().is_empty() {
        return Err(schema("backdrop is empty"));
    }
    if raw.characters.len() > cap {
        return Err(ParseError::TooManyInScene(raw.characters.len()));
    }
    if let Some(unknown) = raw.characters.keys().find(|k| find_in_cast(cast, k).is_none()) {
        return Err(ParseError::UnknownCharacter(unknown.clone()));
    }
    Ok(ScenePlan { narration: raw.narration, backdrop: raw.backdrop, characters: raw.characters })
}
