use serde::de::IgnoredAny;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("empty reply")]
    EmptyReply,
    #[error("no JSON value found in reply")]
    NoJsonFound,
}

/// Returns the first balanced JSON object or array in a model reply.
///
/// A fenced block (```` ``` ```` with an optional language tag) is searched
/// first, then the whole reply. Candidates are bracket-matched with string
/// literals and escapes honoured, and only spans a JSON parser accepts are
/// returned; nothing is repaired.
pub fn extract_json_payload(raw_reply: &str) -> Result<&str, ExtractError> {
    if raw_reply.trim().is_empty() {
        return Err(ExtractError::EmptyReply);
    }
    if let Some(inner) = fenced_block(raw_reply) {
        if let Some(span) = first_valid_value(inner) {
            return Ok(span);
        }
    }
    first_valid_value(raw_reply).ok_or(ExtractError::NoJsonFound)
}

fn fenced_block(s: &str) -> Option<&str> {
    let open = s.find("```")?;
    let after = &s[open + 3..];
    // Language tag runs to the end of the fence line.
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    let close = body.find("```").unwrap_or(body.len());
    Some(&body[..close])
}

fn first_valid_value(s: &str) -> Option<&str> {
    let mut from = 0;
    while let Some(rel) = s[from..].find(['[', '{']) {
        let start = from + rel;
        if let Some(end) = balanced_end(s, start) {
            let span = &s[start..end];
            if serde_json::from_str::<IgnoredAny>(span).is_ok() {
                return Some(span);
            }
        }
        from = start + 1;
    }
    None
}

/// Byte offset one past the bracket closing the one at `start`.
fn balanced_end(s: &str, start: usize) -> Option<usize> {
    let mut stack: Vec<u8> = Vec::new();
    let mut in_str = false;
    let mut escaped = false;
    for (i, b) in s.bytes().enumerate().skip(start) {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'[' | b'{' => stack.push(b),
            b']' | b'}' => {
                let open = stack.pop()?;
                if (open == b'[') != (b == b']') {
                    return None;
                }
                if stack.is_empty() {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}
