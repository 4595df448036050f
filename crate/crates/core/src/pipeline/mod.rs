//! The five-stage orchestrator.
//!
//! Stages run strictly in order: culture, story, characters, segmentation,
//! then planning, crafting and visuals for each of the four scenes. Each
//! stage's prompt is filled only from earlier stages' output. A failure
//! aborts the run and persists what exists so far, marked incomplete.

mod config;
mod lint;
mod stages;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

pub use config::{ConfigError, LlmSettings, PipelineConfig};
pub use lint::{lint_t2i_prompt, LintViolation};
pub use stages::{
    craft_t2i_prompt, extract_culture, generate_visual, generate_visual_with, plan_scene, profile_characters,
    render_cast, segment_scenes, write_story, StageContext, StageOutcome, Staged, Visual, VISUAL_STAGE,
};

use crate::bundle::write_bundle;
use crate::clients::{ChatBackend, ClientError, ImageBackend, Txt2ImgRequest};
use crate::domain::{CultureNotes, IncompleteMarker, SceneRecord, StageLogEntry, StoryBundle, StoryPrompt};
use crate::llm_io::TemplateRegistry;
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageCause {
    #[error("reply broke the stage contract: {}", .0.join("; "))]
    Contract(Vec<String>),
    #[error("{0}")]
    Backend(ClientError),
    #[error("empty reply")]
    EmptyReply,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("stage {stage}{} failed: {cause}", scene.map(|s| format!(" (scene {s})")).unwrap_or_default())]
    StageFailed {
        stage: &'static str,
        scene: Option<usize>,
        cause: StageCause,
        log: Box<StageLogEntry>,
    },
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("writing bundle: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn stage_name(&self) -> &'static str {
        match self {
            PipelineError::StageFailed { stage, .. } => stage,
            PipelineError::Precondition(_) | PipelineError::Config(_) => "setup",
            PipelineError::Io(_) => "persist",
        }
    }
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub bundle: StoryBundle,
    pub dir: PathBuf,
    /// Wall time per phase, in execution order.
    pub timings: Vec<(String, Duration)>,
}

/// Directory a prompt's bundle is written to under `out_dir`.
pub fn bundle_dir(out_dir: &Path, prompt: &StoryPrompt) -> PathBuf {
    out_dir.join(&prompt.id)
}

pub struct Pipeline<'a> {
    pub cfg: &'a PipelineConfig,
    pub llm: &'a dyn ChatBackend,
    /// `None` runs text-only.
    pub t2i: Option<&'a dyn ImageBackend>,
    pub templates: &'a TemplateRegistry,
}

/// Runs every stage with the builtin templates and persists the bundle under
/// `out_dir/{prompt id}`.
pub fn run_pipeline(
    prompt: &StoryPrompt,
    cfg: &PipelineConfig,
    llm: &dyn ChatBackend,
    t2i: Option<&dyn ImageBackend>,
    out_dir: &Path,
) -> Result<PipelineRun, PipelineError> {
    Pipeline { cfg, llm, t2i, templates: TemplateRegistry::builtin() }.run(prompt, out_dir)
}

impl<'a> Pipeline<'a> {
    pub fn run(&self, prompt: &StoryPrompt, out_dir: &Path) -> Result<PipelineRun, PipelineError> {
        self.cfg.validate()?;
        if prompt.text.trim().is_empty() {
            return Err(PipelineError::Precondition("story prompt is empty".into()));
        }
        let dir = bundle_dir(out_dir, prompt);
        let mut bundle = StoryBundle::new(prompt.clone(), self.cfg.bundle_settings(self.t2i.is_none()));
        let mut timings = Vec::new();
        let result = self.drive(&mut bundle, &dir, &mut timings);
        if let Err(e) = &result {
            if let PipelineError::StageFailed { log, .. } = e {
                bundle.stage_log.push((**log).clone());
            }
            bundle.incomplete = Some(IncompleteMarker { stage: e.stage_name().to_string(), reason: e.to_string() });
        }
        let started = Instant::now();
        write_bundle(&bundle, &dir).map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
        timings.push(("persist".to_string(), started.elapsed()));
        result.map(|()| PipelineRun { bundle, dir, timings })
    }

    fn drive(
        &self,
        bundle: &mut StoryBundle,
        dir: &Path,
        timings: &mut Vec<(String, Duration)>,
    ) -> Result<(), PipelineError> {
        let ctx = StageContext { cfg: self.cfg, llm: self.llm, templates: self.templates };
        let exec = if self.cfg.parallel_scenes { Execution::Parallel } else { Execution::Sequential };
        let prompt = bundle.prompt.clone();

        let culture = timed(timings, "culture_extraction", || {
            extract_culture(&ctx, &prompt, &CultureNotes::empty(prompt.id.clone()))
        })?;
        bundle.stage_log.push(culture.log);
        bundle.culture = culture.value;

        let story = timed(timings, "story_writing", || write_story(&ctx, &prompt, &bundle.culture))?;
        bundle.stage_log.push(story.log);
        let story = story.value;
        bundle.story = Some(story.clone());

        let cast = timed(timings, "character_extraction", || profile_characters(&ctx, &story))?;
        bundle.stage_log.push(cast.log);
        let cast = cast.value;
        bundle.characters = cast.clone();

        let scenes = timed(timings, "scene_segmentation", || segment_scenes(&ctx, &story, &cast))?;
        bundle.stage_log.push(scenes.log);
        bundle.scenes = scenes
            .value
            .into_iter()
            .map(|context| SceneRecord { context, plan: None, t2i: None, image_ref: None, image_seed: None })
            .collect();

        let indices: Vec<usize> = (1..=bundle.scenes.len()).collect();

        let contexts: Vec<_> = bundle.scenes.iter().map(|s| s.context.clone()).collect();
        let plans = timed_ok(timings, "scene_planning", || {
            exec.map(&indices, |&i| plan_scene(&ctx, i, &contexts[i - 1], &story, &cast))
        });
        join_scenes(bundle, plans, |scene, plan| scene.plan = Some(plan))?;

        let plans: Vec<_> = bundle.scenes.iter().filter_map(|s| s.plan.clone()).collect();
        let prompts = timed_ok(timings, "t2i_crafting", || {
            exec.map(&indices, |&i| craft_t2i_prompt(&ctx, i, &plans[i - 1], &cast))
        });
        join_scenes(bundle, prompts, |scene, t2i| scene.t2i = Some(t2i))?;

        if let Some(t2i) = self.t2i {
            let images_dir = dir.join("images");
            let requests: Vec<Txt2ImgRequest> = bundle
                .scenes
                .iter()
                .filter_map(|s| s.t2i.as_ref())
                .map(|p| {
                    Txt2ImgRequest::from_prompt(p, &self.cfg.generation, &self.cfg.refiner_checkpoint, self.cfg.two_pass)
                })
                .collect();
            let visuals = timed_ok(timings, VISUAL_STAGE, || {
                exec.map(&indices, |&i| generate_visual_with(i, &requests[i - 1], t2i, &images_dir))
            });
            join_scenes(bundle, visuals, |scene, visual| {
                let name = visual.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                scene.image_ref = Some(format!("images/{name}"));
                scene.image_seed = visual.seed;
            })?;
        }
        Ok(())
    }
}

fn timed<T>(
    timings: &mut Vec<(String, Duration)>,
    name: &str,
    f: impl FnOnce() -> Result<T, PipelineError>,
) -> Result<T, PipelineError> {
    let started = Instant::now();
    let out = f();
    timings.push((name.to_string(), started.elapsed()));
    out
}

fn timed_ok<T>(timings: &mut Vec<(String, Duration)>, name: &str, f: impl FnOnce() -> T) -> T {
    let started = Instant::now();
    let out = f();
    timings.push((name.to_string(), started.elapsed()));
    out
}

/// Applies per-scene results in scene order, stopping at the first failure
/// so the log reads as if the scenes had run one after another.
fn join_scenes<T>(
    bundle: &mut StoryBundle,
    results: Vec<Result<Staged<T>, PipelineError>>,
    mut apply: impl FnMut(&mut SceneRecord, T),
) -> Result<(), PipelineError> {
    for (scene, result) in bundle.scenes.iter_mut().zip(results) {
        let staged = result?;
        bundle.stage_log.push(staged.log);
        apply(scene, staged.value);
    }
    Ok(())
}
