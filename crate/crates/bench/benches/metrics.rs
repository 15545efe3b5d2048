use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use harmrank_bench::{first_row, synthetic_table};
use harmrank_core::metrics::{aih, criticality_index, numeric_gini};
use harmrank_core::sensitivity::boundary_aih;
use harmrank_core::{evaluate_table, MetricOptions};

fn per_row(c: &mut Criterion) {
    let mut g = c.benchmark_group("row");
    for m in [9, 32, 128] {
        let f = first_row(&synthetic_table(1, m, 1));
        let s: Vec<f64> = (1..=m).map(|x| x as f64).collect();
        g.bench_with_input(BenchmarkId::new("aih", m), &f, |b, f| b.iter(|| aih(black_box(f))));
        g.bench_with_input(BenchmarkId::new("ci", m), &f, |b, f| b.iter(|| criticality_index(black_box(f))));
        g.bench_with_input(BenchmarkId::new("boundary", m), &f, |b, f| b.iter(|| boundary_aih(black_box(f))));
        g.bench_with_input(BenchmarkId::new("gini", m), &f, |b, f| b.iter(|| numeric_gini(black_box(f), &s)));
    }
    g.finish();
}

fn whole_table(c: &mut Criterion) {
    let table = synthetic_table(200, 9, 2);
    let options = MetricOptions {
        boundary: true,
        ..Default::default()
    };
    c.bench_function("evaluate_table 200x9", |b| b.iter(|| evaluate_table(black_box(&table), &options)));
}

criterion_group!(benches, per_row, whole_table);
criterion_main!(benches);
