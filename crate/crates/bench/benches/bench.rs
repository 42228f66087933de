use std::hint::black_box;

use criterion::{BenchmarkId, Criterion, criterion_group, criterion_main};
use treestab_bench::{breast_cancer, fitted_tree, random_pair};
use treestab_core::stability::{Objectives, pareto_frontier};
use treestab_core::{DistanceConfig, TrainConfig, extract_paths, path_set_distance, train_tree, tree_distance};

fn distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree_distance");
    for depth in [3, 6, 9] {
        let (space, a, b) = random_pair(depth, 7);
        group.bench_with_input(BenchmarkId::new("random", depth), &depth, |bench, _| {
            bench.iter(|| tree_distance(black_box(&a), black_box(&b), &space, &DistanceConfig::default()).unwrap())
        });
    }
    let data = breast_cancer();
    let (a, b) = (
        fitted_tree(&data, 12),
        fitted_tree(&data.subset(&(0..400).collect::<Vec<_>>()), 12),
    );
    let (pa, pb) = (
        extract_paths(&a, data.space()).unwrap(),
        extract_paths(&b, data.space()).unwrap(),
    );
    group.bench_function("breast_cancer_depth12_paths", |bench| {
        bench.iter(|| {
            path_set_distance(black_box(&pa), black_box(&pb), data.space(), &DistanceConfig::default()).unwrap()
        })
    });
    group.finish();
}

fn cart(c: &mut Criterion) {
    let data = breast_cancer();
    let mut group = c.benchmark_group("cart");
    for depth in [3, 12] {
        group.bench_with_input(BenchmarkId::new("breast_cancer", depth), &depth, |bench, &d| {
            bench.iter(|| train_tree(black_box(&data), &TrainConfig::new(d, 3)).unwrap())
        });
    }
    group.finish();
}

fn frontier(c: &mut Criterion) {
    let points: Vec<Objectives> = (0..1000u64)
        .map(|i| Objectives::new((i * 7919 % 1000) as f64 / 1000.0, (i * 104729 % 997) as f64 / 997.0))
        .collect();
    c.bench_function("pareto_frontier_1000", |bench| {
        bench.iter(|| pareto_frontier(black_box(&points)).unwrap())
    });
}

criterion_group!(benches, distance, cart, frontier);
criterion_main!(benches);
