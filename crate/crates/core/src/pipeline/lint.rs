use std::fmt;

use regex::RegexBuilder;
use serde::Serialize;

use crate::domain::{CharacterProfile, MANDATORY_SUFFIX};
use crate::grammar::{parse_t2i_prompt, GrammarError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LintViolation {
    ContainsCharacterName(String),
    MissingSuffix,
    GrammarError(String),
    BadWeight(String),
}

impl fmt::Display for LintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LintViolation::ContainsCharacterName(n) => {
                write!(f, "prompt names character {n:?}; use a generic identifier such as Boy or Girl")
            }
            LintViolation::MissingSuffix => write!(f, "prompt must end with \"{MANDATORY_SUFFIX}\""),
            LintViolation::GrammarError(e) => write!(f, "prompt does not parse: {e}"),
            LintViolation::BadWeight(w) => write!(f, "weight {w:?} outside (0, 2]"),
        }
    }
}

/// Checks an image prompt against the crafting rules.
pub fn lint_t2i_prompt(prompt: &str, cast: &[CharacterProfile]) -> Vec<LintViolation> {
    lint_with(prompt, cast, true)
}

pub(crate) fn lint_with(prompt: &str, cast: &[CharacterProfile], check_names: bool) -> Vec<LintViolation> {
    let mut out = Vec::new();
    if check_names {
        for c in cast {
            let pattern = format!(r"\b{}\b", regex::escape(c.name.trim()));
            let hit = RegexBuilder::new(&pattern)
                .case_insensitive(true)
                .build()
                .is_ok_and(|re| re.is_match(prompt));
            if hit {
                out.push(LintViolation::ContainsCharacterName(c.name.clone()));
            }
        }
    }
    if !prompt.trim_end().ends_with(MANDATORY_SUFFIX) {
        out.push(LintViolation::MissingSuffix);
    }
    match parse_t2i_prompt(prompt) {
        Ok(_) => {}
        Err(GrammarError::BadWeight(w)) => out.push(LintViolation::BadWeight(w)),
        Err(e) => out.push(LintViolation::GrammarError(e.to_string())),
    }
    out
}
