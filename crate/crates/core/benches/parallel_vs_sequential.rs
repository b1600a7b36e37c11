use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use kbmap::align::{align_rule_based, knn_align, AlignDirection, KnnConfig};
use kbmap::embed::MockEmbedder;
use kbmap::kb::{ClosedKb, ClosedTriple, OpenKb, OpenTriple, RelationSchema};
use kbmap::par;
use kbmap::translate::{translate_kb, MockGenerator, TranslateConfig};
use kbmap::ClosedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 20] = [
    "fish", "water", "ocean", "bird", "tree", "dog", "bone", "cat", "milk", "rain", "flood", "fire", "smoke",
    "student", "book", "sun", "river", "stone", "house", "garden",
];
const PREDICATES: [&str; 6] = ["live in", "eat", "cause", "be", "have", "use"];
const RELATIONS: [&str; 6] = ["AtLocation", "Desires", "Causes", "IsA", "HasA", "UsedFor"];

fn phrase(r: &mut ChaCha8Rng) -> String {
    let n = r.gen_range(1..=3);
    (0..n).map(|_| *WORDS.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
}

fn data(n: usize) -> (OpenKb, ClosedKb, RelationSchema) {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let schema = RelationSchema::new(RELATIONS).unwrap();
    let open = (0..n)
        .map(|_| OpenTriple::new(phrase(&mut r), *PREDICATES.choose(&mut r).unwrap(), phrase(&mut r)))
        .collect();
    let closed: Vec<ClosedTriple> = (0..n)
        .map(|_| ClosedTriple::new(phrase(&mut r), *RELATIONS.choose(&mut r).unwrap(), phrase(&mut r)))
        .collect();
    let closed = ClosedKb::from_triples("closed", closed, &schema).0;
    (OpenKb::new("open", open), closed, schema)
}

fn label(threads: usize) -> String {
    let mode = if cfg!(feature = "parallel") { "parallel" } else { "sequential-build" };
    if threads == 1 {
        "1-thread".to_string()
    } else {
        format!("{mode}-pool")
    }
}

fn bench(c: &mut Criterion) {
    let (open, closed, schema) = data(4000);
    let index = ClosedIndex::build(&closed);
    let embedder = MockEmbedder::new(64);
    let generator = MockGenerator::hashed(&schema);

    let mut g = c.benchmark_group("rule_align");
    for threads in [1, 0] {
        g.bench_function(BenchmarkId::from_parameter(label(threads)), |b| {
            b.iter(|| par::with_threads(threads, || black_box(align_rule_based(&open, &index))))
        });
    }
    g.finish();

    let (small_open, small_closed, _) = data(800);
    let mut g = c.benchmark_group("knn_align");
    g.sample_size(10);
    for threads in [1, 0] {
        let config = KnnConfig {
            direction: AlignDirection::OpenToClosed,
            top_k: 500,
            batch_size: 64,
            concurrency: threads,
        };
        g.bench_function(BenchmarkId::from_parameter(label(threads)), |b| {
            b.iter(|| black_box(knn_align(&small_open, &small_closed, &embedder, config).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("translate");
    g.sample_size(20);
    for threads in [1, 0] {
        let config = TranslateConfig { k: 10, batch_size: 64, concurrency: threads };
        g.bench_function(BenchmarkId::from_parameter(label(threads)), |b| {
            b.iter(|| black_box(translate_kb(&open, &generator, &schema, config).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
