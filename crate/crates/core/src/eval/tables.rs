//! CSV and plain-text rendering of the evaluation tables. Column order is
//! fixed; floats use the shortest representation that round-trips.

use std::fmt::Write as _;

use super::{CompositeRow, CsiRow, EvalError, RatingTable, RefRow};

pub const COMPOSITE_HEADER: [&str; 5] = ["story_id", "tool_id", "count", "mean", "std"];
pub const REFBASED_HEADER: [&str; 4] = ["story_id", "tool_id", "count", "mean"];
pub const CSI_HEADER: [&str; 4] = ["story_id", "tool_id", "participants", "score"];
pub const WILCOXON_HEADER: [&str; 9] = ["metric", "n_effective", "w_plus", "w_minus", "W", "Z", "p", "p_exact", "status"];

fn to_csv<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn composite_csv(rows: &[CompositeRow]) -> String {
    to_csv(
        COMPOSITE_HEADER,
        rows.iter()
            .map(|r| vec![r.story_id.clone(), r.tool_id.clone(), r.count.to_string(), num(r.mean), num(r.std)]),
    )
}

pub fn refbased_csv(rows: &[RefRow]) -> String {
    to_csv(
        REFBASED_HEADER,
        rows.iter().map(|r| vec![r.story_id.clone(), r.tool_id.clone(), r.count.to_string(), num(r.mean)]),
    )
}

pub fn csi_csv(rows: &[CsiRow]) -> String {
    to_csv(
        CSI_HEADER,
        rows.iter().map(|r| vec![r.story_id.clone(), r.tool_id.clone(), r.participants.to_string(), num(r.score)]),
    )
}

pub fn wilcoxon_csv(table: &RatingTable) -> String {
    to_csv(
        WILCOXON_HEADER,
        table.rows.iter().map(|row| match &row.result {
            Ok(r) => vec![
                row.metric.to_string(),
                r.n_effective.to_string(),
                num(r.w_plus),
                num(r.w_minus),
                num(r.w),
                num(r.z),
                num(r.p),
                r.p_exact.map(num).unwrap_or_default(),
                "ok".to_string(),
            ],
            Err(e) => {
                let status = match e {
                    EvalError::AllZeroDifferences => "all_zero_differences",
                    _ => "no_pairs",
                };
                let mut cells = vec![row.metric.to_string(), "0".to_string()];
                cells.extend(std::iter::repeat_n(String::new(), 6));
                cells.push(status.to_string());
                cells
            }
        }),
    )
}

/// Column-aligned plain text for a CSV document.
pub fn text_table(csv_text: &str) -> String {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    let rows: Vec<Vec<String>> = reader
        .records()
        .filter_map(Result::ok)
        .map(|r| r.iter().map(shorten).collect())
        .collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("  "));
        }
    }
    out
}

/// Long floats are cut to four decimals for display.
fn shorten(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(x) if cell.contains('.') && cell.len() > 8 => format!("{x:.4}"),
        _ => cell.to_string(),
    }
}
