//! Seeded generator for the shipped synthetic annotation study.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storyforge::eval::{
    AnnotationRecord, AnnotationSpan, CsiCategory, Dataset, LikertRating, ReferenceHighlights, ReferenceSpan,
};

pub const SEED: u64 = 20240617;
pub const PARTICIPANTS: usize = 18;
pub const STORIES: [&str; 2] = ["dalhousie_market", "karnataka_festival"];
pub const TOOLS: [&str; 2] = ["ours", "chatgpt"];

pub fn dataset_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/eval/synthetic_study.json")
}

use CsiCategory::*;

fn pool(story: &str) -> Vec<(&'static str, CsiCategory)> {
    match story {
        "dalhousie_market" => vec![
            ("Dhauladhar mountains", Ecology),
            ("pine trees", Ecology),
            ("hill station", Ecology),
            ("local market", PublicLife),
            ("signboards in Hindi", PublicLife),
            ("old church", PublicLife),
            ("steaming momos", PersonalLife),
            ("red woolen sweater", PersonalLife),
            ("Himachali cap", PersonalLife),
            ("bargaining with shopkeepers", SocialLife),
            ("family business", SocialLife),
            ("local legends", CustomsAndPursuits),
            ("superstitions", CustomsAndPursuits),
            ("exploring abandoned buildings", PrivatePassions),
            ("Preeti", ProperNouns),
            ("Dalhousie", ProperNouns),
        ],
        _ => vec![
            ("coconut palms", Ecology),
            ("monsoon rain", Ecology),
            ("temple courtyard", PublicLife),
            ("village fair", PublicLife),
            ("silk saree", PersonalLife),
            ("jasmine in her hair", PersonalLife),
            ("masala dosa", PersonalLife),
            ("elders blessing the children", SocialLife),
            ("joint family", SocialLife),
            ("Dasara procession", CustomsAndPursuits),
            ("rangoli at the doorstep", CustomsAndPursuits),
            ("Yakshagana dance", PrivatePassions),
            ("Geetha", ProperNouns),
            ("Mysuru", ProperNouns),
        ],
    }
}

fn references(story: &'static str) -> ReferenceHighlights {
    // The expert set is every other pool entry.
    let spans = pool(story)
        .into_iter()
        .step_by(2)
        .map(|(text, category)| ReferenceSpan { text: text.to_string(), category })
        .collect();
    ReferenceHighlights { story_id: story.to_string(), spans }
}

fn rating(rng: &mut ChaCha8Rng, bias: i32) -> u8 {
    let base: i32 = rng.gen_range(2..=4) + bias;
    let jitter: i32 = rng.gen_range(-1..=1);
    (base + jitter).clamp(1, 5) as u8
}

pub fn generate() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut records = Vec::new();
    for p in 1..=PARTICIPANTS {
        for story in STORIES {
            for tool in TOOLS {
                let bias = i32::from(tool == "ours");
                let ratings = LikertRating {
                    cultural_nuance: rating(&mut rng, bias),
                    culture_specific_words: rating(&mut rng, bias),
                    plot: rating(&mut rng, 0),
                    scene_selection: rating(&mut rng, 0),
                    image_consistency: rating(&mut rng, bias),
                    character_depiction: rating(&mut rng, bias),
                    cultural_accuracy: rating(&mut rng, bias),
                };
                let candidates = pool(story);
                let k = rng.gen_range(3..=6);
                let spans = candidates
                    .choose_multiple(&mut rng, k)
                    .map(|&(text, category)| {
                        let roll: f64 = rng.gen();
                        let good = if tool == "ours" { 0.7 } else { 0.45 };
                        let severity = if roll < good {
                            1
                        } else if roll < good + 0.2 {
                            0
                        } else {
                            -1
                        };
                        AnnotationSpan { text: text.to_string(), category, severity, comment: None }
                    })
                    .collect();
                records.push(AnnotationRecord {
                    participant_id: format!("p{p:02}"),
                    story_id: story.to_string(),
                    tool_id: tool.to_string(),
                    ratings,
                    spans,
                });
            }
        }
    }
    Dataset::new(records, STORIES.into_iter().map(references).collect())
}

pub fn render() -> String {
    let mut text = serde_json::to_string_pretty(&generate()).expect("dataset serialises");
    text.push('\n');
    text
}
