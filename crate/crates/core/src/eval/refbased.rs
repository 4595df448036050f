use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::composite::mean_std;
use super::{Dataset, EvalError, ReferenceHighlights};

pub const MAX_ORDER: usize = 4;

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision of `user` against `reference`; 0 when `user`
/// has no n-grams of this order.
pub fn ngram_precision(user: &[String], reference: &[String], n: usize) -> f64 {
    if n == 0 || user.len() < n {
        return 0.0;
    }
    let total = user.len() - n + 1;
    let refs = ngram_counts(reference, n);
    let matched: usize = ngram_counts(user, n)
        .into_iter()
        .map(|(gram, c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    matched as f64 / total as f64
}

/// Unsmoothed geometric mean: any zero precision makes it zero.
pub fn geometric_mean(precisions: &[f64]) -> f64 {
    if precisions.is_empty() || precisions.iter().any(|&p| p <= 0.0) {
        return 0.0;
    }
    let log_sum: f64 = precisions.iter().map(|p| p.ln()).sum();
    (log_sum / precisions.len() as f64).exp()
}

/// Length penalty for highlighting more than the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `min(1, exp(1 - |p|/|r|))`.
    #[default]
    Intended,
    /// `min(1, 1 - exp(|r|/|p|))`, kept for audit; always negative.
    Literal,
}

impl Penalty {
    pub fn apply(self, user_len: usize, ref_len: usize) -> f64 {
        let (p, r) = (user_len as f64, ref_len as f64);
        match self {
            Penalty::Intended => (1.0 - p / r).exp().min(1.0),
            Penalty::Literal => (1.0 - (r / p).exp()).min(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefScoreBreakdown {
    pub precisions: [f64; MAX_ORDER],
    pub geometric_mean: f64,
    pub penalty: f64,
    pub score: f64,
    pub ref_len: usize,
    pub user_len: usize,
}

/// Overlap of a participant's highlights with the reference highlights.
pub fn reference_based_score<S: AsRef<str>>(
    user_spans: &[S],
    reference: &ReferenceHighlights,
    penalty: Penalty,
) -> Result<RefScoreBreakdown, EvalError> {
    let join = |parts: Vec<&str>| parts.join(" ");
    let ref_tokens = tokenize(&join(reference.spans.iter().map(|s| s.text.as_str()).collect()));
    if ref_tokens.is_empty() {
        return Err(EvalError::EmptyReference(reference.story_id.clone()));
    }
    let user_tokens = tokenize(&join(user_spans.iter().map(AsRef::as_ref).collect()));
    if user_tokens.is_empty() {
        return Ok(RefScoreBreakdown {
            precisions: [0.0; MAX_ORDER],
            geometric_mean: 0.0,
            penalty: 0.0,
            score: 0.0,
            ref_len: ref_tokens.len(),
            user_len: 0,
        });
    }
    let mut precisions = [0.0; MAX_ORDER];
    for (i, p) in precisions.iter_mut().enumerate() {
        *p = ngram_precision(&user_tokens, &ref_tokens, i + 1);
    }
    let gm = geometric_mean(&precisions);
    let pen = penalty.apply(user_tokens.len(), ref_tokens.len());
    Ok(RefScoreBreakdown {
        precisions,
        geometric_mean: gm,
        penalty: pen,
        score: pen * gm,
        ref_len: ref_tokens.len(),
        user_len: user_tokens.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefRow {
    /// `"overall"` for the per-tool mean of story means.
    pub story_id: String,
    pub tool_id: String,
    pub count: usize,
    pub mean: f64,
}

/// Mean score per (story, tool) over participants, then one overall row per
/// tool. Records whose story has no reference are listed in the second value.
pub fn refbased_table(dataset: &Dataset, penalty: Penalty) -> Result<(Vec<RefRow>, Vec<String>), EvalError> {
    let mut skipped = Vec::new();
    let mut cells: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in &dataset.records {
        let Some(reference) = dataset.reference(&r.story_id) else {
            skipped.push(format!("{}/{}/{}: no reference highlights", r.participant_id, r.story_id, r.tool_id));
            continue;
        };
        let texts: Vec<&str> = r.spans.iter().map(|s| s.text.as_str()).collect();
        let score = reference_based_score(&texts, reference, penalty)?.score;
        cells.entry((&r.story_id, &r.tool_id)).or_default().push(score);
    }
    if cells.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut rows: Vec<RefRow> = cells
        .iter()
        .map(|(&(s, t), xs)| RefRow { story_id: s.into(), tool_id: t.into(), count: xs.len(), mean: mean_std(xs).0 })
        .collect();
    let mut per_tool: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &rows {
        per_tool.entry(row.tool_id.clone()).or_default().push(row.mean);
    }
    for (tool, means) in per_tool {
        let count = dataset.records.iter().filter(|r| r.tool_id == tool && dataset.reference(&r.story_id).is_some()).count();
        rows.push(RefRow { story_id: "overall".into(), tool_id: tool, count, mean: mean_std(&means).0 });
    }
    Ok((rows, skipped))
}
