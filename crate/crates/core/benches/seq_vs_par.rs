//! Criterion benches comparing the sequential fallback against the rayon
//! path, plus the grid-vs-brute graph construction tradeoff.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_graph_construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph_construction");
    group.sample_size(10);
    for &n in &[1000usize, 4000] {
        let pts = borsuk::geom::sample_uniform(2, n, 42).unwrap();
        group.bench_with_input(BenchmarkId::new("grid", n), &pts, |b, pts| {
            b.iter(|| borsuk::graph::build_graph_grid(black_box(pts.clone()), 0.3).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bruteforce", n), &pts, |b, pts| {
            b.iter(|| borsuk::graph::build_graph_bruteforce(black_box(pts.clone()), 0.3).unwrap())
        });
    }
    group.finish();
}

fn bench_trial_batches(c: &mut Criterion) {
    let mut group = c.benchmark_group("edge_count_trials");
    group.sample_size(10);
    for &threads in &[1usize, 2, 4] {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    borsuk::experiments::edge_count_experiment(
                        2,
                        8.0,
                        &[1000],
                        black_box(200),
                        9,
                        threads,
                    )
                    .unwrap()
                })
            },
        );
    }
    group.finish();
}

fn bench_percolation_sweep_cell(c: &mut Criterion) {
    let mut group = c.benchmark_group("percolation_reach");
    group.sample_size(10);
    for &threads in &[1usize, 4] {
        group.bench_with_input(
            BenchmarkId::new("threads", threads),
            &threads,
            |b, &threads| {
                b.iter(|| {
                    borsuk::abperc::boundary_reach_prob(2, 1.0, 12.0, black_box(200), 3, threads)
                        .unwrap()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_graph_construction,
    bench_trial_batches,
    bench_percolation_sweep_cell
);
criterion_main!(benches);
