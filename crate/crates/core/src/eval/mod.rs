//! Evaluation over annotation datasets: the five-factor composite score,
//! reference-based highlight overlap, summed cultural severity, and the
//! Wilcoxon signed-rank test for paired tool ratings.

mod composite;
mod csi;
mod dataset;
mod refbased;
pub mod tables;
mod wilcoxon;

use thiserror::Error;

pub use composite::{aggregate_composite, composite_score, CompositeRow};
pub use csi::{csi_overall, csi_score, csi_table, participant_sum, CsiRow};
pub use dataset::{
    load_dataset, parse_dataset, AnnotationRecord, AnnotationSpan, CsiCategory, Dataset, DatasetError, LikertRating,
    ReferenceHighlights, ReferenceSpan,
};
pub use refbased::{
    geometric_mean, ngram_precision, reference_based_score, refbased_table, tokenize, Penalty, RefRow, RefScoreBreakdown,
};
pub use wilcoxon::{
    exact_p_value, rating_table, wilcoxon_signed_rank, wilcoxon_with, RatingRow, RatingTable, WilcoxonResult,
    ZeroMethod, EXACT_MAX_N,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no records")]
    EmptyInput,
    #[error("no records for story {story_id:?} and tool {tool_id:?}")]
    EmptyGroup { story_id: String, tool_id: String },
    #[error("reference highlights for story {0:?} are empty")]
    EmptyReference(String),
    #[error("every pair has a zero difference")]
    AllZeroDifferences,
}
