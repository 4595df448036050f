//! Random inputs shared by the property and acceptance tests.

#![allow(dead_code)]

use rand::Rng;

const WORDS: &[&str] = &[
    "girl", "boy", "red", "sweater", "market", "street", "mountains", "sunny", "kite", "temple", "10", "years",
    "old", "à", "golden", "light", "Pixar", "style",
];

fn words(rng: &mut impl Rng, max: usize) -> String {
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

fn pad(rng: &mut impl Rng) -> &'static str {
    ["", "", " ", "  ", "\t"][rng.gen_range(0..5)]
}

/// A prompt the grammar accepts: plain runs and `(...)` groups of depth 1..=3,
/// some with a weight, joined by commas with random spacing.
pub fn valid_prompt(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=8);
    let mut pieces = Vec::with_capacity(n);
    for _ in 0..n {
        let core = if rng.gen_bool(0.5) {
            words(rng, 4)
        } else {
            let depth = rng.gen_range(1..=3);
            let parts = rng.gen_range(1..=3);
            let mut body = (0..parts).map(|_| words(rng, 3)).collect::<Vec<_>>().join(", ");
            if rng.gen_bool(0.6) {
                let w = rng.gen_range(1..=200) as f64 / 100.0;
                let token = match rng.gen_range(0..3) {
                    0 => format!("{w}"),
                    1 => format!("{w:.1}"),
                    _ => format!("{w:.2}"),
                };
                if token.parse::<f64>().is_ok_and(|t| t > 0.0) {
                    body = format!("{body}:{token}");
                }
            }
            format!("{}{}{}", "(".repeat(depth), body, ")".repeat(depth))
        };
        pieces.push(format!("{}{}{}", pad(rng), core, pad(rng)));
    }
    pieces.join(",")
}

/// Token lists over a tiny vocabulary, so n-gram collisions are common.
pub fn tokens(rng: &mut impl Rng, max: usize, vocab: &[&str]) -> Vec<String> {
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect()
}
