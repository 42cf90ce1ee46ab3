//! Throughput of the terminal samplers and the tail estimators.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use mgtail_bench::{qv_samples, BENCH_SEED};
use mgtail_core::models::{sample_terminal, ModelKind, ModelSpec, DEFAULT_STEP};
use mgtail_core::rng::derive_stream;
use mgtail_core::tails::{
    empirical_tail_curve, geometric_grid, tauberian_compare, TailMode, DEFAULT_SMALL_LAMBDAS,
};

const BATCH: u64 = 1_000;

fn terminal_samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("terminal_sample");
    group.throughput(Throughput::Elements(BATCH));
    for (kind, horizon) in [
        (ModelKind::StoppedBrownianUpper, 1e6),
        (ModelKind::CompensatedPoissonUpper, 1e4),
        (ModelKind::RandomWalkAtomsUpper, 1e6),
    ] {
        let model = ModelSpec::default_for(kind).with_horizon(horizon);
        group.bench_with_input(
            BenchmarkId::from_parameter(kind.letter()),
            &model,
            |b, m| {
                let mut offset = 0;
                b.iter(|| {
                    let mut acc = 0.0;
                    for i in 0..BATCH {
                        let s =
                            sample_terminal(m, derive_stream(BENCH_SEED, offset + i), DEFAULT_STEP)
                                .unwrap();
                        acc += s.qv_pred;
                    }
                    offset += BATCH;
                    black_box(acc)
                });
            },
        );
    }
    group.finish();
}

fn tail_estimators(c: &mut Criterion) {
    let model = ModelSpec::default_for(ModelKind::StoppedBrownianUpper);
    let samples = qv_samples(&model, 100_000);
    let grid = geometric_grid(5.0, 300.0, 12).unwrap();
    let mut group = c.benchmark_group("tails");
    group.throughput(Throughput::Elements(samples.len() as u64));
    group.bench_function("empirical_tail_curve", |b| {
        b.iter(|| empirical_tail_curve(black_box(&samples), &grid, TailMode::SqrtTail).unwrap())
    });
    group.bench_function("tauberian_compare", |b| {
        b.iter(|| {
            tauberian_compare(black_box(&samples), &[], &DEFAULT_SMALL_LAMBDAS, &grid).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, terminal_samplers, tail_estimators);
criterion_main!(benches);
