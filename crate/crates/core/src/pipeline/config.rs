use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clients::DEFAULT_REFINER_CHECKPOINT;
use crate::domain::{
    BundleSettings, GenerationParams, CHARACTER_CAP, DEFAULT_WORD_LIMIT, SCENE_CHARACTER_CAP, SCENE_COUNT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
}

/// Chat sampling settings, passed through to the backend untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub seed: Option<i64>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings { model: "gpt-4-turbo".into(), temperature: 0.7, max_tokens: None, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Re-asks per stage after a reply breaks the stage contract.
    pub max_stage_retries: u32,
    pub word_limit: usize,
    pub scene_count: usize,
    pub char_cap: usize,
    pub scene_char_cap: usize,
    /// Must be set for `char_cap`/`scene_char_cap` to differ from the fixed values.
    pub caps_override: bool,
    pub generation: GenerationParams,
    /// Reject image prompts that mention a cast member by name.
    pub lint_strict: bool,
    /// Run planning, crafting and image generation for the four scenes concurrently.
    pub parallel_scenes: bool,
    pub llm: LlmSettings,
    /// Refine with a separate img2img call instead of the integrated refiner.
    pub two_pass: bool,
    pub refiner_checkpoint: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_stage_retries: 2,
            word_limit: DEFAULT_WORD_LIMIT,
            scene_count: SCENE_COUNT,
            char_cap: CHARACTER_CAP,
            scene_char_cap: SCENE_CHARACTER_CAP,
            caps_override: false,
            generation: GenerationParams::default(),
            lint_strict: true,
            parallel_scenes: false,
            llm: LlmSettings::default(),
            two_pass: false,
            refiner_checkpoint: DEFAULT_REFINER_CHECKPOINT.into(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.word_limit == 0 {
            return bad("word_limit must be positive");
        }
        // Scenes map one-to-one onto the four arc roles.
        if self.scene_count != SCENE_COUNT {
            return bad("scene_count is fixed at 4");
        }
        if self.char_cap == 0 || self.scene_char_cap == 0 {
            return bad("character caps must be positive");
        }
        if !self.caps_override && (self.char_cap != CHARACTER_CAP || self.scene_char_cap != SCENE_CHARACTER_CAP) {
            return bad("char_cap and scene_char_cap are fixed at 3 and 2 unless caps_override is set");
        }
        if !(self.llm.temperature >= 0.0) {
            return bad("llm.temperature must be >= 0");
        }
        if self.llm.model.trim().is_empty() {
            return bad("llm.model must not be empty");
        }
        self.generation.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn bundle_settings(&self, text_only: bool) -> BundleSettings {
        BundleSettings {
            word_limit: self.word_limit,
            scene_count: self.scene_count,
            char_cap: self.char_cap,
            scene_char_cap: self.scene_char_cap,
            caps_overridden: self.caps_override,
            text_only,
            generation: self.generation.clone(),
        }
    }
}
