use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use tsca_bench::{default_params, fixture};
use tsca_core::{Engine, EngineConfig, RuleChoice};

fn neighbor_counts(c: &mut Criterion) {
    let grid = fixture(1000, 0.5, 1);
    let mut colsum = vec![0u8; grid.width()];
    let mut out = vec![0u8; grid.width()];
    let mut group = c.benchmark_group("neighbor_counts");
    group.throughput(Throughput::Elements(grid.len() as u64));
    group.bench_function("1000x1000", |b| {
        b.iter(|| {
            for r in 0..grid.height() {
                grid.row_one_counts(r, &mut colsum, &mut out);
                black_box(&out);
            }
        })
    });
    group.finish();
}

fn single_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for side in [100usize, 1000] {
        let grid = fixture(side, 0.5, 2);
        let mut dst = grid.clone();
        group.throughput(Throughput::Elements(grid.len() as u64));
        for (name, rule) in [("f", RuleChoice::F), ("g", RuleChoice::G)] {
            let engine = Engine::new(default_params(0.2), 3);
            group.bench_with_input(BenchmarkId::new(name, side), &side, |b, _| {
                b.iter(|| black_box(engine.apply_into(&grid, &mut dst, 0, rule)))
            });
        }
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let grid = fixture(100, 0.1, 4);
    let engine = Engine::new(default_params(0.2), 4);
    let cfg = EngineConfig::default();
    c.bench_function("run_100x100_rho0.1", |b| {
        b.iter(|| black_box(engine.run(&grid, &cfg).iterations))
    });
}

criterion_group!(benches, neighbor_counts, single_step, full_run);
criterion_main!(benches);
