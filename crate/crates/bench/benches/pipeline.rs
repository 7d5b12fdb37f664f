use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netcoh::{
    attraction_dynamics, attraction_stationary, capacity_matrix, epsilon_concepts, v_complete,
    BiasMatrix, CompletionParams, Matrix, RankOptions,
};
use netcoh_bench::{random_dag, random_network};
use std::hint::black_box;

fn completion(c: &mut Criterion) {
    let mut g = c.benchmark_group("v_complete");
    for n in [10, 20, 40] {
        let net = random_dag(n, 0.3, 0.5, 1.5, n as u64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &net, |b, net| {
            b.iter(|| v_complete(black_box(net), CompletionParams::new(3.0, 0.5)).unwrap())
        });
    }
    g.finish();
}

fn attraction(c: &mut Criterion) {
    let mut g = c.benchmark_group("attraction");
    for n in [10, 30, 60] {
        let net = random_network(n, 0.2, 0.0, 2.0, n as u64);
        let op = attraction_dynamics(&capacity_matrix(&net));
        let m = Matrix::filled(n, n, 1.0 / (n * n) as f64);
        g.bench_with_input(BenchmarkId::new("apply", n), &op, |b, op| {
            b.iter(|| op.apply(black_box(&m)))
        });
        let opts = RankOptions::damped(0.85);
        g.bench_with_input(BenchmarkId::new("stationary", n), &op, |b, op| {
            b.iter(|| attraction_stationary(black_box(op), &opts).unwrap())
        });
    }
    g.finish();
}

fn cliques(c: &mut Criterion) {
    let mut g = c.benchmark_group("epsilon_concepts");
    for n in [10, 20, 30] {
        // Block-structured bias so the threshold graph has sizeable cliques.
        let m = Matrix::from_fn(
            n,
            n,
            |i, j| if i % 3 == j % 3 { 0.01 } else { -0.01 } + 1e-4 * ((i * 7 + j * 13) % 5) as f64,
        );
        let bias = BiasMatrix(m);
        g.bench_with_input(BenchmarkId::from_parameter(n), &bias, |b, bias| {
            b.iter(|| epsilon_concepts(black_box(bias), 0.005, 100_000).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, completion, attraction, cliques);
criterion_main!(benches);
