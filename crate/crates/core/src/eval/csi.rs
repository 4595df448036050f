use std::collections::BTreeMap;

use serde::Serialize;

use super::{AnnotationRecord, Dataset, EvalError};

/// Sum of one participant's span severities.
pub fn participant_sum(record: &AnnotationRecord) -> i64 {
    record.spans.iter().map(|s| i64::from(s.severity)).sum()
}

/// Mean over participants of their severity sums for one story and tool.
pub fn csi_score(records: &[AnnotationRecord], story_id: &str, tool_id: &str) -> Result<f64, EvalError> {
    let sums: Vec<i64> = records
        .iter()
        .filter(|r| r.story_id == story_id && r.tool_id == tool_id)
        .map(participant_sum)
        .collect();
    if sums.is_empty() {
        return Err(EvalError::EmptyGroup { story_id: story_id.into(), tool_id: tool_id.into() });
    }
    Ok(sums.iter().sum::<i64>() as f64 / sums.len() as f64)
}

/// A tool's overall score: the mean of its per-story scores.
pub fn csi_overall(records: &[AnnotationRecord], tool_id: &str) -> Result<f64, EvalError> {
    let stories: std::collections::BTreeSet<&str> =
        records.iter().filter(|r| r.tool_id == tool_id).map(|r| r.story_id.as_str()).collect();
    if stories.is_empty() {
        return Err(EvalError::EmptyGroup { story_id: "*".into(), tool_id: tool_id.into() });
    }
    let means = stories.iter().map(|s| csi_score(records, s, tool_id)).collect::<Result<Vec<_>, _>>()?;
    Ok(means.iter().sum::<f64>() / means.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsiRow {
    /// `"overall"` for the per-tool mean of story means.
    pub story_id: String,
    pub tool_id: String,
    pub participants: usize,
    pub score: f64,
}

/// Score per (story, tool), then one overall row per tool.
pub fn csi_table(dataset: &Dataset) -> Result<Vec<CsiRow>, EvalError> {
    let records = &dataset.records;
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cells: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for r in records {
        *cells.entry((&r.story_id, &r.tool_id)).or_default() += 1;
    }
    let mut rows = Vec::new();
    for (&(story, tool), &n) in &cells {
        rows.push(CsiRow { story_id: story.into(), tool_id: tool.into(), participants: n, score: csi_score(records, story, tool)? });
    }
    let tools: std::collections::BTreeSet<&str> = cells.keys().map(|&(_, t)| t).collect();
    for tool in tools {
        let participants: std::collections::BTreeSet<&str> =
            records.iter().filter(|r| r.tool_id == tool).map(|r| r.participant_id.as_str()).collect();
        rows.push(CsiRow {
            story_id: "overall".into(),
            tool_id: tool.into(),
            participants: participants.len(),
            score: csi_overall(records, tool)?,
        });
    }
    Ok(rows)
}
