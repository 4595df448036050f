use std::collections::BTreeMap;

use serde::Serialize;

use super::{AnnotationRecord, EvalError, LikertRating};

/// Product of the five scored ratings, each over 5, times 100. Plot and scene
/// selection are not part of the score.
pub fn composite_score(r: &LikertRating) -> f64 {
    [r.cultural_nuance, r.culture_specific_words, r.image_consistency, r.character_depiction, r.cultural_accuracy]
        .iter()
        .map(|&x| f64::from(x) / 5.0)
        .product::<f64>()
        * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeRow {
    pub story_id: String,
    pub tool_id: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single record.
    pub std: f64,
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Composite statistics per (story, tool), sorted by story then tool.
pub fn aggregate_composite(records: &[AnnotationRecord]) -> Result<Vec<CompositeRow>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.story_id, &r.tool_id)).or_default().push(composite_score(&r.ratings));
    }
    Ok(groups
        .into_iter()
        .map(|((story, tool), scores)| {
            let (mean, std) = mean_std(&scores);
            CompositeRow { story_id: story.into(), tool_id: tool.into(), count: scores.len(), mean, std }
        })
        .collect())
}
