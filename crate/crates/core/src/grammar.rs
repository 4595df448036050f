//! The weighted text-to-image prompt dialect.
//!
//! A prompt is a comma-joined sequence of segments. A segment is either plain
//! text or a parenthesised group `(` ... `)`; stacking parentheses `((...))`
//! raises the emphasis depth, and an optional `:weight` may sit right before the
//! closing parentheses:
//!
//! ```text
//! Girl and Boy, ((Girl 10 years old, red sweater:1.2)), (market street), cartoon
//! ```
//!
//! Commas inside a group belong to the group. Parsing keeps the surrounding
//! whitespace and the literal weight token, so [`serialize_segments`] reproduces
//! the input byte-for-byte.

use std::fmt;

use thiserror::Error;

/// Upper bound accepted for an attention weight.
pub const MAX_WEIGHT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightedSegment {
    /// Segment text without parentheses or weight suffix.
    pub text: String,
    pub weight: f64,
    /// Number of stacked parentheses around the text; 0 for plain text.
    pub emphasis_depth: u32,
    /// The weight exactly as written, when one was present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_token: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub leading: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub trailing: String,
}

impl WeightedSegment {
    pub fn plain(text: impl Into<String>) -> Self {
        WeightedSegment {
            text: text.into(),
            weight: 1.0,
            emphasis_depth: 0,
            weight_token: None,
            leading: String::new(),
            trailing: String::new(),
        }
    }

    fn write_to(&self, out: &mut String) {
        let depth = self.emphasis_depth as usize;
        out.push_str(&self.leading);
        out.extend(std::iter::repeat_n('(', depth));
        out.push_str(&self.text);
        if let Some(token) = &self.weight_token {
            out.push(':');
            out.push_str(token);
        }
        out.extend(std::iter::repeat_n(')', depth));
        out.push_str(&self.trailing);
    }
}

impl fmt::Display for WeightedSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_to(&mut s);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("empty prompt")]
    Empty,
    #[error("unbalanced parenthesis at byte {0}")]
    UnbalancedParens(usize),
    #[error("parenthesis at byte {0} does not delimit a whole segment")]
    MisplacedParen(usize),
    #[error("bad weight {0:?}: expected a decimal in (0, 2]")]
    BadWeight(String),
}

/// Parses a prompt into its segments.
pub fn parse_t2i_prompt(raw: &str) -> Result<Vec<WeightedSegment>, GrammarError> {
    if raw.is_empty() {
        return Err(GrammarError::Empty);
    }
    split_top_level(raw)?
        .into_iter()
        .map(|(offset, piece)| parse_segment(offset, piece))
        .collect()
}

/// Joins segments back into prompt text.
pub fn serialize_segments(segments: &[WeightedSegment]) -> String {
    let mut out = String::new();
    for (i, seg) in segments.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        seg.write_to(&mut out);
    }
    out
}

fn split_top_level(raw: &str) -> Result<Vec<(usize, &str)>, GrammarError> {
    let mut pieces = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut start = 0;
    for (i, ch) in raw.char_indices() {
        match ch {
            '(' => open.push(i),
            ')' => {
                if open.pop().is_none() {
                    return Err(GrammarError::UnbalancedParens(i));
                }
            }
            ',' if open.is_empty() => {
                pieces.push((start, &raw[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    if let Some(&first) = open.first() {
        return Err(GrammarError::UnbalancedParens(first));
    }
    pieces.push((start, &raw[start..]));
    Ok(pieces)
}

fn parse_segment(offset: usize, piece: &str) -> Result<WeightedSegment, GrammarError> {
    let core = piece.trim();
    let lead_len = piece.len() - piece.trim_start().len();
    let leading = piece[..lead_len].to_string();
    let trailing = piece[lead_len + core.len()..].to_string();
    let core_offset = offset + lead_len;

    let opens = core.bytes().take_while(|&b| b == b'(').count();
    if opens == 0 {
        if let Some(pos) = core.find(['(', ')']) {
            return Err(GrammarError::MisplacedParen(core_offset + pos));
        }
        return Ok(WeightedSegment {
            text: core.to_string(),
            leading,
            trailing,
            ..WeightedSegment::plain("")
        });
    }

    let closes = core.bytes().rev().take_while(|&b| b == b')').count();
    if closes < opens {
        // The outermost group closes before the segment ends.
        let pos = core.rfind(')').unwrap_or(0);
        return Err(GrammarError::MisplacedParen(core_offset + pos));
    }
    if closes > opens {
        let pos = core.len() - closes;
        return Err(GrammarError::MisplacedParen(core_offset + pos));
    }
    let body = &core[opens..core.len() - closes];
    if let Some(pos) = body.find(['(', ')']) {
        return Err(GrammarError::MisplacedParen(core_offset + opens + pos));
    }

    let (text, weight_token, weight) = match body.rfind(':') {
        Some(colon) => {
            let token = &body[colon + 1..];
            let weight = parse_weight(token)?;
            (&body[..colon], Some(token.to_string()), weight)
        }
        None => (body, None, 1.0),
    };

    Ok(WeightedSegment {
        text: text.to_string(),
        weight,
        emphasis_depth: opens as u32,
        weight_token,
        leading,
        trailing,
    })
}

fn parse_weight(token: &str) -> Result<f64, GrammarError> {
    let bad = || GrammarError::BadWeight(token.to_string());
    let (int, frac) = match token.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (token, None),
    };
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    let well_formed = match frac {
        Some(f) => digits(int) && !f.is_empty() && digits(f),
        None => !int.is_empty() && digits(int),
    };
    if !well_formed {
        return Err(bad());
    }
    let weight: f64 = token.parse().map_err(|_| bad())?;
    if weight > 0.0 && weight <= MAX_WEIGHT {
        Ok(weight)
    } else {
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_weighted_group() {
        let segs = parse_t2i_prompt("(Kids illustration, Pixar style:1.2)").unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].text, "Kids illustration, Pixar style");
        assert_eq!(segs[0].weight, 1.2);
        assert_eq!(segs[0].emphasis_depth, 1);
    }

    #[test]
    fn plain_word_defaults() {
        let segs = parse_t2i_prompt("masterpiece").unwrap();
        assert_eq!(segs, vec![WeightedSegment::plain("masterpiece")]);
    }

    #[test]
    fn mixed_depths() {
        let raw = "((boy running:1.2)), (beach), cartoon";
        let segs = parse_t2i_prompt(raw).unwrap();
        let depths: Vec<u32> = segs.iter().map(|s| s.emphasis_depth).collect();
        let weights: Vec<f64> = segs.iter().map(|s| s.weight).collect();
        assert_eq!(depths, [2, 1, 0]);
        assert_eq!(weights, [1.2, 1.0, 1.0]);
        assert_eq!(segs[1].leading, " ");
        assert_eq!(serialize_segments(&segs), raw);
    }

    #[test]
    fn unbalanced() {
        assert_eq!(
            parse_t2i_prompt("((boy:1.2), x"),
            Err(GrammarError::UnbalancedParens(0))
        );
        assert_eq!(
            parse_t2i_prompt("boy), x"),
            Err(GrammarError::UnbalancedParens(3))
        );
    }

    #[test]
    fn misplaced() {
        assert!(matches!(
            parse_t2i_prompt("girl (red) dress"),
            Err(GrammarError::MisplacedParen(5))
        ));
        assert!(matches!(
            parse_t2i_prompt("(a)(b)"),
            Err(GrammarError::MisplacedParen(_))
        ));
        assert!(matches!(
            parse_t2i_prompt("((a) b)"),
            Err(GrammarError::MisplacedParen(_))
        ));
    }

    #[test]
    fn weights_out_of_range() {
        for bad in ["((boy:3.0))", "(boy:0)", "(boy:abc)", "(boy:1.)", "(boy: 1.2)", "(boy:)"] {
            assert!(
                matches!(parse_t2i_prompt(bad), Err(GrammarError::BadWeight(_))),
                "{bad}"
            );
        }
        assert_eq!(parse_t2i_prompt("(boy:2.0)").unwrap()[0].weight, 2.0);
        assert_eq!(parse_t2i_prompt("(boy:.5)").unwrap()[0].weight, 0.5);
    }

    #[test]
    fn keeps_weight_token_verbatim() {
        let raw = "(boy:1.20)";
        let segs = parse_t2i_prompt(raw).unwrap();
        assert_eq!(segs[0].weight_token.as_deref(), Some("1.20"));
        assert_eq!(serialize_segments(&segs), raw);
    }

    #[test]
    fn empty_pieces_round_trip() {
        for raw in [",", "a,,b", " a , b ", "a,"] {
            let segs = parse_t2i_prompt(raw).unwrap();
            assert_eq!(serialize_segments(&segs), raw);
        }
        assert_eq!(parse_t2i_prompt(""), Err(GrammarError::Empty));
    }
}
