use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use growthscope::density::kde_with;
use growthscope::skeleton::skeleton;
use growthscope::wavelet::cwt_slope_with;
use growthscope::{Execution, ScaleGrid, SeriesKind, TimeSeries};

/// Quarterly random-walk log level, deterministic without an RNG dependency.
fn synthetic_series(n: usize) -> TimeSeries {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut level = 9.0;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        level += 0.005 + 0.01 * (u - 0.5);
        values.push(level);
    }
    let times = (0..n).map(|i| 1900.0 + i as f64 * 0.25).collect();
    TimeSeries::new(times, values, SeriesKind::LogLevel, "bench").unwrap()
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("cwt_slope");
    for n in [256, 1024, 4096] {
        let series = synthetic_series(n);
        let grid = ScaleGrid::default_for(&series).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| cwt_slope_with(black_box(&series), &grid, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_skeleton(c: &mut Criterion) {
    let series = synthetic_series(1024);
    let grid = ScaleGrid::default_for(&series).unwrap();
    let field = cwt_slope_with(&series, &grid, Execution::Sequential).unwrap();
    let mut group = c.benchmark_group("skeleton");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| skeleton(black_box(&field), exec)));
    }
    group.finish();
}

fn bench_kde(c: &mut Criterion) {
    let series = synthetic_series(4096);
    let grid = ScaleGrid::new(vec![1.0]).unwrap();
    let field = cwt_slope_with(&series, &grid, Execution::Sequential).unwrap();
    let samples = field.row(0).to_vec();
    let mut group = c.benchmark_group("kde");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| kde_with(black_box(&samples), 0.002, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_transform, bench_skeleton, bench_kde);
criterion_main!(benches);
