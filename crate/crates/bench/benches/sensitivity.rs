use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use harmrank_bench::synthetic_table;
use harmrank_core::sensitivity::{permutation_scenarios, removal_scenario, ward_cluster};
use harmrank_core::{CiConvention, ScenarioSpec, SeverityOrdering};

fn scenarios(c: &mut Criterion) {
    let table = synthetic_table(9, 9, 3);
    let ordering = SeverityOrdering::new(table.units.clone()).unwrap();
    let mut g = c.benchmark_group("scenarios");
    g.sample_size(20);
    g.bench_function("permutation k=5 n=20", |b| {
        let spec = ScenarioSpec::permutation(5, 20, 7);
        b.iter(|| permutation_scenarios(black_box(&table), &ordering, &spec, CiConvention::Survival))
    });
    g.bench_function("removal 0.2 x100", |b| {
        let spec = ScenarioSpec::removal(0.2, 100, 7);
        b.iter(|| removal_scenario(black_box(&table), &spec, CiConvention::Survival))
    });
    g.finish();
}

fn clustering(c: &mut Criterion) {
    let table = synthetic_table(60, 9, 4);
    let rows: Vec<Vec<f64>> = table.counts.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    c.bench_function("ward 60 rows", |b| b.iter(|| ward_cluster(black_box(&rows), &table.categories)));
}

criterion_group!(benches, scenarios, clustering);
criterion_main!(benches);
