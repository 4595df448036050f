//! Culturally grounded visual-story generation and evaluation.
//!
//! The crate is split along the lines of the work it does:
//!
//! - [`domain`]: the typed artifacts a run produces and the invariants they obey
//! - [`llm_io`]: stage prompt templates and parsing of structured model replies
//! - [`grammar`]: the weighted text-to-image prompt dialect
//! - [`clients`]: chat and txt2img transports plus fixture record/replay
//! - [`pipeline`]: the five-stage orchestrator that assembles a [`domain::StoryBundle`]
//! - [`bundle`]: on-disk persistence of bundles
//! - [`eval`]: composite, reference-based and severity scores, Wilcoxon signed-rank
//! - [`report`]: self-contained HTML rendering of a bundle
//! - [`cli`]: the command-line surface
//!
//! Data-parallel loops go through [`par::Execution`]; with the `parallel` feature
//! disabled every strategy runs sequentially.

pub mod bundle;
pub mod cli;
pub mod clients;
pub mod domain;
pub mod eval;
pub mod grammar;
pub mod llm_io;
pub mod par;
pub mod pipeline;
pub mod report;

/// Version tag written into every persisted document.
pub const SCHEMA_VERSION: u32 = 1;
