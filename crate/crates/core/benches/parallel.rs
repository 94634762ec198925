//! Sequential versus rayon execution of the data-parallel stages.
//!
//! Run with `cargo bench -p vcrop-core`. Building with
//! `--no-default-features` turns the parallel variant into a second
//! sequential run, which is a convenient baseline.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use vcrop_core::analysis::lof_scores_with;
use vcrop_core::metrics::DenseTrack;
use vcrop_core::motion::{FlowFrames, TrackConfig};
use vcrop_core::render::render_portrait;
use vcrop_core::scenes::content_scores;
use vcrop_core::smoothing::smooth_track;
use vcrop_core::synth::{fixture_set, rng};
use vcrop_core::{Execution, FilterConfig, Point};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn smoothing(c: &mut Criterion) {
    let set = fixture_set(1, 1).expect("fixture");
    let (_, video) = &set.videos[0];
    let track = &set.raw[0];
    let mut g = c.benchmark_group("smooth_track");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                // fresh pyramids each run so caching does not hide the work
                let ff = FlowFrames::from_sequence(video, &TrackConfig::default(), exec).unwrap();
                black_box(smooth_track(track, &ff, &track.scene_list(), &FilterConfig::default(), exec).unwrap())
            })
        });
    }
    g.finish();
}

fn rendering(c: &mut Criterion) {
    let set = fixture_set(2, 1).expect("fixture");
    let (_, video) = &set.videos[0];
    let dense = DenseTrack::from_track(&set.raw[0]).unwrap();
    let mut g = c.benchmark_group("render_portrait");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(render_portrait(video, &dense, 360, exec).unwrap()))
        });
    }
    g.finish();
}

fn outliers(c: &mut Criterion) {
    let mut r = rng(3);
    let pts: Vec<Point> = (0..2000)
        .map(|_| Point::new(r.random_range(0.0..1920.0), r.random_range(0.0..1080.0)))
        .collect();
    let mut g = c.benchmark_group("lof_scores");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(lof_scores_with(&pts, 20, exec).unwrap()))
        });
    }
    g.finish();
}

fn scenes(c: &mut Criterion) {
    let set = fixture_set(4, 3).expect("fixture");
    let (_, video) = &set.videos[2];
    let mut g = c.benchmark_group("content_scores");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| black_box(content_scores(video, exec))));
    }
    g.finish();
}

criterion_group!(benches, smoothing, rendering, outliers, scenes);
criterion_main!(benches);
