//! The individual stage operations. Each returns its parsed value together
//! with the exchange log for the bundle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::PipelineConfig;
use super::lint::lint_with;
use super::{PipelineError, StageCause};
use crate::clients::{ChatBackend, ChatRequest, ClientError, ImageBackend, Txt2ImgRequest, DEFAULT_REFINER_CHECKPOINT};
use crate::domain::{
    find_in_cast, count_words, CharacterProfile, CultureNotes, GenerationParams, SceneContext, ScenePlan, StageAttempt,
    StageLogEntry, Story, StoryPrompt, T2IPrompt,
};
use crate::llm_io::{
    extract_json_payload, parse_characters_capped, parse_scene_list, parse_scene_plan_capped, StageId,
    TemplateRegistry,
};

pub const VISUAL_STAGE: &str = "visual_generation";

/// Summary of how a stage went.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageOutcome {
    pub stage_id: String,
    pub attempts: u32,
    pub raw_reply: String,
    pub parsed_ok: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Staged<T> {
    pub value: T,
    pub outcome: StageOutcome,
    pub log: StageLogEntry,
}

/// What every chat stage needs: limits, the backend and the templates.
#[derive(Clone, Copy)]
pub struct StageContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub llm: &'a dyn ChatBackend,
    pub templates: &'a TemplateRegistry,
}

pub(crate) fn corrective(user: &str, violations: &[String]) -> String {
    format!(
        "{user}\n\nYour previous reply was rejected: {}. Reply again following the required format exactly.",
        violations.join("; ")
    )
}

fn failed(stage: &'static str, scene: Option<usize>, cause: StageCause, log: StageLogEntry) -> PipelineError {
    PipelineError::StageFailed { stage, scene, cause, log: Box::new(log) }
}

/// Cast rendered one `Name: description` per line.
pub fn render_cast(cast: &[CharacterProfile]) -> String {
    cast.iter().map(|c| format!("{}: {}", c.name, c.description)).collect::<Vec<_>>().join("\n")
}

impl<'a> StageContext<'a> {
    pub fn new(cfg: &'a PipelineConfig, llm: &'a dyn ChatBackend) -> Self {
        StageContext { cfg, llm, templates: TemplateRegistry::builtin() }
    }

    fn request(&self, system: &str, user: String) -> ChatRequest {
        let llm = &self.cfg.llm;
        ChatRequest {
            model: llm.model.clone(),
            system: system.to_string(),
            user,
            temperature: llm.temperature,
            max_tokens: llm.max_tokens,
            seed: llm.seed,
        }
    }

    /// One request/reply, appended to `log`.
    fn exchange(&self, system: &str, user: String, log: &mut StageLogEntry) -> Result<String, ClientError> {
        let req = self.request(system, user);
        let request = serde_json::to_value(&req).unwrap_or(Value::Null);
        let result = self.llm.chat_complete(&req);
        log.attempts.push(StageAttempt {
            request,
            reply: result.as_ref().ok().map(|r| Value::String(r.clone())),
            violations: Vec::new(),
            error: result.as_ref().err().map(ToString::to_string),
        });
        result
    }

    /// Renders the stage template and asks until `parse` accepts a reply or
    /// the retry budget runs out.
    fn ask<T>(
        &self,
        stage: StageId,
        scene: Option<usize>,
        vars: &[(&str, &str)],
        parse: impl Fn(&str) -> Result<T, Vec<String>>,
    ) -> Result<Staged<T>, PipelineError> {
        let rendered = self.templates.get(stage).render(vars).map_err(|e| PipelineError::Precondition(e.to_string()))?;
        let mut log = StageLogEntry { stage: stage.as_str().to_string(), scene, attempts: Vec::new() };
        let mut violations: Vec<String> = Vec::new();
        let mut last_reply = String::new();
        for attempt in 1..=self.cfg.max_stage_retries + 1 {
            let user = if attempt == 1 { rendered.user.clone() } else { corrective(&rendered.user, &violations) };
            let reply = match self.exchange(&rendered.system, user, &mut log) {
                Ok(r) => r,
                Err(e) => return Err(failed(stage.as_str(), scene, StageCause::Backend(e), log)),
            };
            let parsed = if reply.trim().is_empty() { Err(vec!["empty reply".to_string()]) } else { parse(&reply) };
            match parsed {
                Ok(value) => {
                    let outcome = StageOutcome {
                        stage_id: stage.as_str().to_string(),
                        attempts: attempt,
                        raw_reply: reply,
                        parsed_ok: true,
                        violations: Vec::new(),
                    };
                    return Ok(Staged { value, outcome, log });
                }
                Err(v) => {
                    if let Some(last) = log.attempts.last_mut() {
                        last.violations = v.clone();
                    }
                    violations = v;
                    last_reply = reply;
                }
            }
        }
        let cause = if last_reply.trim().is_empty() { StageCause::EmptyReply } else { StageCause::Contract(violations) };
        Err(failed(stage.as_str(), scene, cause, log))
    }
}

fn json_stage<T, E: ToString>(reply: &str, parse: impl Fn(&str) -> Result<T, E>) -> Result<T, Vec<String>> {
    let payload = extract_json_payload(reply).map_err(|e| vec![e.to_string()])?;
    parse(payload).map_err(|e| vec![e.to_string()])
}

pub fn extract_culture(
    ctx: &StageContext<'_>,
    prompt: &StoryPrompt,
    prior: &CultureNotes,
) -> Result<Staged<CultureNotes>, PipelineError> {
    check_prompt(prompt)?;
    let prior_text = prior.render();
    ctx.ask(
        StageId::CultureExtraction,
        None,
        &[("cultural_context", &prior_text), ("user_input", &prompt.text)],
        |reply| Ok(CultureNotes::from_reply(reply, prompt.id.clone())),
    )
}

fn check_prompt(prompt: &StoryPrompt) -> Result<(), PipelineError> {
    if prompt.text.trim().is_empty() {
        return Err(PipelineError::Precondition("story prompt is empty".into()));
    }
    Ok(())
}

fn brevity_instruction(words: usize, limit: usize) -> String {
    format!("The current draft has {words} words. Rewrite it in at most {limit} words, keeping the plot.")
}

/// Writes the story; one extra re-ask if the draft overruns the word limit.
pub fn write_story(
    ctx: &StageContext<'_>,
    prompt: &StoryPrompt,
    notes: &CultureNotes,
) -> Result<Staged<Story>, PipelineError> {
    check_prompt(prompt)?;
    let limit = ctx.cfg.word_limit;
    let notes_text = notes.render();
    let mut staged = ctx.ask(
        StageId::StoryWriting,
        None,
        &[("story", ""), ("cultural_context", &notes_text), ("user_input", &prompt.text)],
        |reply| Ok(reply.trim().to_string()),
    )?;
    let mut text = std::mem::take(&mut staged.value);
    let words = count_words(&text);
    // The brevity re-ask spends one unit of the stage retry budget.
    if words > limit && staged.outcome.attempts <= ctx.cfg.max_stage_retries {
        let user_input = format!("{}\n\n{}", prompt.text, brevity_instruction(words, limit));
        let rendered = ctx
            .templates
            .get(StageId::StoryWriting)
            .render(&[("story", &text), ("cultural_context", &notes_text), ("user_input", &user_input)])
            .map_err(|e| PipelineError::Precondition(e.to_string()))?;
        let reply = match ctx.exchange(&rendered.system, rendered.user, &mut staged.log) {
            Ok(r) => r,
            Err(e) => return Err(failed(StageId::StoryWriting.as_str(), None, StageCause::Backend(e), staged.log)),
        };
        staged.outcome.attempts += 1;
        if reply.trim().is_empty() {
            if let Some(last) = staged.log.attempts.last_mut() {
                last.violations = vec!["empty reply; keeping previous draft".into()];
            }
        } else {
            text = reply.trim().to_string();
            staged.outcome.raw_reply = reply;
        }
    }
    let story = Story::new(text, prompt.id.clone(), limit);
    if !story.length_ok {
        staged.outcome.violations.push(format!("story has {} words, limit {limit}", story.word_count));
    }
    Ok(Staged { value: story, outcome: staged.outcome, log: staged.log })
}

pub fn profile_characters(ctx: &StageContext<'_>, story: &Story) -> Result<Staged<Vec<CharacterProfile>>, PipelineError> {
    let cap = ctx.cfg.char_cap;
    ctx.ask(StageId::CharacterExtraction, None, &[("story", &story.text)], |reply| {
        json_stage(reply, |p| parse_characters_capped(p, cap))
    })
}

pub fn segment_scenes(
    ctx: &StageContext<'_>,
    story: &Story,
    cast: &[CharacterProfile],
) -> Result<Staged<Vec<SceneContext>>, PipelineError> {
    let characters = render_cast(cast);
    ctx.ask(StageId::SceneSegmentation, None, &[("story", &story.text), ("characters", &characters)], |reply| {
        json_stage(reply, parse_scene_list)
    })
}

/// Plans scene `index` (1-based).
pub fn plan_scene(
    ctx: &StageContext<'_>,
    index: usize,
    scene: &SceneContext,
    story: &Story,
    cast: &[CharacterProfile],
) -> Result<Staged<ScenePlan>, PipelineError> {
    let characters = render_cast(cast);
    let cap = ctx.cfg.scene_char_cap;
    ctx.ask(
        StageId::ScenePlanning,
        Some(index),
        &[("story", &story.text), ("characters", &characters), ("context", &scene.description)],
        |reply| json_stage(reply, |p| parse_scene_plan_capped(p, cast, cap)),
    )
}

/// Strips a code fence or surrounding quotes a model may wrap the prompt in.
fn unwrap_prompt(reply: &str) -> &str {
    let mut text = reply.trim();
    if let Some(rest) = text.strip_prefix("```") {
        let body = rest.split_once('\n').map_or("", |(_, b)| b);
        text = body.rsplit_once("```").map_or(body, |(b, _)| b).trim();
    }
    if text.len() >= 2 && text.starts_with('"') && text.ends_with('"') {
        text = text[1..text.len() - 1].trim();
    }
    text
}

pub fn craft_t2i_prompt(
    ctx: &StageContext<'_>,
    index: usize,
    plan: &ScenePlan,
    cast: &[CharacterProfile],
) -> Result<Staged<T2IPrompt>, PipelineError> {
    let action = plan
        .characters
        .iter()
        .map(|(name, pose)| format!("{name}: {pose}"))
        .collect::<Vec<_>>()
        .join("\n");
    let description = plan
        .characters
        .keys()
        .filter_map(|name| find_in_cast(cast, name))
        .map(|c| format!("{}: {}", c.name, c.description))
        .collect::<Vec<_>>()
        .join("\n");
    let strict = ctx.cfg.lint_strict;
    ctx.ask(
        StageId::T2iCrafting,
        Some(index),
        &[
            ("backdrop", &plan.backdrop),
            ("action", &action),
            ("description", &description),
            ("narration", &plan.narration),
        ],
        |reply| {
            let text = unwrap_prompt(reply);
            let lint = lint_with(text, cast, strict);
            if !lint.is_empty() {
                return Err(lint.iter().map(ToString::to_string).collect());
            }
            T2IPrompt::new(text, index).map_err(|e| vec![e.to_string()])
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visual {
    pub path: PathBuf,
    pub seed: Option<i64>,
}

/// Generates with the integrated refiner and the default refiner checkpoint.
pub fn generate_visual(
    prompt: &T2IPrompt,
    params: &GenerationParams,
    t2i: &dyn ImageBackend,
    out_dir: &Path,
) -> Result<Staged<Visual>, PipelineError> {
    let req = Txt2ImgRequest::from_prompt(prompt, params, DEFAULT_REFINER_CHECKPOINT, false);
    generate_visual_with(prompt.scene_index, &req, t2i, out_dir)
}

/// Sends `req` and writes `scene_{index}.png` into `out_dir`.
pub fn generate_visual_with(
    index: usize,
    req: &Txt2ImgRequest,
    t2i: &dyn ImageBackend,
    out_dir: &Path,
) -> Result<Staged<Visual>, PipelineError> {
    let mut log = StageLogEntry { stage: VISUAL_STAGE.to_string(), scene: Some(index), attempts: Vec::new() };
    let mut attempt = StageAttempt { request: req.wire_log(), reply: None, violations: Vec::new(), error: None };
    let image = match t2i.txt2img(req) {
        Ok(img) => img,
        Err(e) => {
            attempt.error = Some(e.to_string());
            log.attempts.push(attempt);
            return Err(failed(VISUAL_STAGE, Some(index), StageCause::Backend(e), log));
        }
    };
    // Image bytes stay out of the log; the file is the record.
    attempt.reply = Some(json!({ "png_bytes": image.png.len(), "seed": image.seed }));
    log.attempts.push(attempt);
    let path = out_dir.join(format!("scene_{index}.png"));
    fs::create_dir_all(out_dir)
        .and_then(|_| fs::write(&path, &image.png))
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    let outcome = StageOutcome {
        stage_id: VISUAL_STAGE.to_string(),
        attempts: 1,
        raw_reply: String::new(),
        parsed_ok: true,
        violations: Vec::new(),
    };
    Ok(Staged { value: Visual { path, seed: image.seed }, outcome, log })
}
