//! Sequential vs rayon execution for the two hot loops: exact signed-rank
//! enumeration and batch reference-based scoring.
//!
//! ```text
//! cargo bench --bench parallel_vs_sequential
//! ```

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use storyforge::eval::{exact_p_value, reference_based_score, CsiCategory, Penalty, ReferenceHighlights, ReferenceSpan};
use storyforge::par::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn exact_p(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_p_value");
    group.sample_size(10);
    for n in [16u64, 20, 22] {
        let ranks: Vec<u64> = (1..=n).map(|r| 2 * r).collect();
        let w2 = n * (n + 1) / 3;
        for (label, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(label, n), &ranks, |b, ranks| {
                b.iter(|| exact_p_value(black_box(ranks), w2, exec))
            });
        }
    }
    group.finish();
}

fn refbased_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vocab = ["rice", "paddy", "boat", "kite", "temple", "monsoon", "saree", "dosa"];
    let phrase = |rng: &mut ChaCha8Rng, len: usize| {
        (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
    };
    let reference = ReferenceHighlights {
        story_id: "s".into(),
        spans: (0..40).map(|_| ReferenceSpan { text: phrase(&mut rng, 3), category: CsiCategory::Ecology }).collect(),
    };
    let participants: Vec<Vec<String>> =
        (0..4000).map(|_| (0..12).map(|_| phrase(&mut rng, 3)).collect()).collect();

    let mut group = c.benchmark_group("refbased_batch");
    for (label, exec) in MODES {
        group.bench_function(BenchmarkId::new(label, participants.len()), |b| {
            b.iter(|| {
                exec.map(&participants, |spans| {
                    reference_based_score(spans, &reference, Penalty::Intended).map(|s| s.score).unwrap_or(0.0)
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exact_p, refbased_batch);
criterion_main!(benches);
