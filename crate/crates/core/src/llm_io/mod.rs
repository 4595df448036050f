//! Stage prompt templates and parsing of structured replies.

mod extract;
mod parse;
mod templates;

pub use extract::{extract_json_payload, ExtractError};
pub use parse::{
    parse_characters, parse_characters_capped, parse_scene_list, parse_scene_plan, parse_scene_plan_capped, ParseError,
};
pub use templates::{render_template, PromptTemplate, RenderedPrompt, StageId, TemplateError, TemplateRegistry};

pub use crate::grammar::{parse_t2i_prompt, serialize_segments, GrammarError};
