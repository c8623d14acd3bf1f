//! Rayon vs sequential comparison for the data-parallel inner loops:
//! k-means assignment, full k-means runs, batch relevance classification,
//! and per-clip visibility tables.
//!
//! Run with `cargo bench -p cliplabel-core`. Building with
//! `--no-default-features` benches only the sequential paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cliplabel_core::analysis::{
    assign_points, assign_points_seq, clip_landmark_visibility, clip_landmark_visibility_seq,
    kmeans, KmeansParams, FEATURE_DIM,
};
use cliplabel_core::clips::{ClipLabel, ClipRecord};
use cliplabel_core::lexicon::Lexicon;
use cliplabel_core::pose::{Landmark, PoseFrame, PoseStream, LANDMARK_COUNT};
use cliplabel_core::relevance::{classify_batch, classify_batch_seq, VisibilityGate};
use cliplabel_core::sentence::Sentence;

fn feature_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..FEATURE_DIM).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

fn bench_assignment(c: &mut Criterion) {
    let points = feature_rows(4000, 1);
    let centroids = feature_rows(6, 2);
    let mut group = c.benchmark_group("kmeans_assign");
    group.bench_with_input(BenchmarkId::new("seq", points.len()), &points, |b, pts| {
        b.iter(|| assign_points_seq(pts, &centroids))
    });
    #[cfg(feature = "parallel")]
    group.bench_with_input(BenchmarkId::new("rayon", points.len()), &points, |b, pts| {
        b.iter(|| assign_points(pts, &centroids))
    });
    group.finish();
}

fn bench_full_kmeans(c: &mut Criterion) {
    let points = feature_rows(1500, 3);
    let params = KmeansParams {
        k: 6,
        seed: 42,
        max_iter: 25,
        tol: 1e-6,
    };
    // The assignment step inside kmeans dispatches on the feature; wall
    // time here reflects whichever build is active.
    c.bench_function("kmeans_full_1500x99", |b| {
        b.iter(|| kmeans(&points, &params).unwrap())
    });
}

fn synthetic_sentences(n: usize) -> Vec<Sentence> {
    (0..n as u64)
        .map(|i| {
            let mut s = Sentence::new(
                i,
                ["keep", "your", "elbows", "tucked", "and", "your", "back", "straight"]
                    .iter()
                    .map(|w| w.to_string())
                    .collect(),
                i * 400,
                i * 400 + 380,
            );
            s.relevance = None;
            s
        })
        .collect()
}

fn uniform_stream(frames: u64) -> PoseStream {
    let frames: Vec<PoseFrame> = (0..frames)
        .map(|i| PoseFrame {
            frame_index: i,
            landmarks: vec![
                Landmark {
                    x: 0.4,
                    y: 0.3,
                    z: 0.0,
                    visibility: 0.9,
                };
                LANDMARK_COUNT
            ],
        })
        .collect();
    PoseStream::new("bench", 30.0, frames).unwrap()
}

fn bench_relevance_batch(c: &mut Criterion) {
    let lexicon = Lexicon::builtin();
    let stream = uniform_stream(2000);
    let gate = VisibilityGate::default();
    let sentences = synthetic_sentences(800);
    let mut group = c.benchmark_group("relevance_batch");
    group.bench_function("seq", |b| {
        b.iter_batched(
            || sentences.clone(),
            |mut batch| classify_batch_seq(&mut batch, &lexicon, &stream, &gate),
            criterion::BatchSize::SmallInput,
        )
    });
    #[cfg(feature = "parallel")]
    group.bench_function("rayon", |b| {
        b.iter_batched(
            || sentences.clone(),
            |mut batch| classify_batch(&mut batch, &lexicon, &stream, &gate),
            criterion::BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_visibility_table(c: &mut Criterion) {
    let stream = uniform_stream(6000);
    let clips: Vec<ClipRecord> = (0..60)
        .map(|i| ClipRecord {
            clip_id: format!("bench-{i:04}"),
            video_id: "bench".into(),
            label: if i % 3 == 0 {
                ClipLabel::Irrelevant
            } else {
                ClipLabel::RelevantCorrect
            },
            frame_start: i * 100,
            frame_end: (i + 1) * 100,
            source_sentence_ids: vec![],
            summary: None,
        })
        .collect();
    let mut group = c.benchmark_group("visibility_table");
    group.bench_function("seq", |b| {
        b.iter(|| clip_landmark_visibility_seq(&clips, &stream))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("rayon", |b| {
        b.iter(|| clip_landmark_visibility(&clips, &stream))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_assignment,
    bench_full_kmeans,
    bench_relevance_batch,
    bench_visibility_table
);
criterion_main!(benches);
