//! Full solves across instance sizes, comparing the scheduler with its
//! pre-mature stop variant.

use std::collections::BTreeSet;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use focs_bench::office_instance;
use focs_core::{solve, solve_prefix, MaxFlowMethod};

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for n in [50usize, 100, 200] {
        let (jobs, tl) = office_instance(n, 42);
        group.bench_with_input(BenchmarkId::new("full", n), &n, |b, _| {
            b.iter(|| solve(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath).unwrap())
        });
        let focus = BTreeSet::from([0]);
        group.bench_with_input(BenchmarkId::new("pre-mature-stop", n), &n, |b, _| {
            b.iter(|| {
                solve_prefix(&jobs, &tl, MaxFlowMethod::ShortestAugmentingPath, &focus).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solve);
criterion_main!(benches);
