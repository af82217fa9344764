//! Parallel vs sequential kernels at sizes straddling the parallel threshold.
//!
//! Without the `parallel` feature both variants run the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use templar::backend::host;
use templar::{parallel, BackendRef, Tensor};

const SIZES: [usize; 3] = [1 << 12, 1 << 16, 1 << 20];

fn variants() -> [(&'static str, bool); 2] {
    [("parallel", true), ("sequential", false)]
}

fn input(f: BackendRef, n: usize, seed: u64) -> Tensor {
    f.random_uniform(-1.0, 1.0, &[n], seed).unwrap()
}

fn bench_elementwise(c: &mut Criterion) {
    let f = host();
    let mut group = c.benchmark_group("elementwise");
    for n in SIZES {
        let (a, b) = (input(f, n, 1), input(f, n, 2));
        group.throughput(Throughput::Elements(n as u64));
        for (name, on) in variants() {
            parallel::set_enabled(on);
            group.bench_with_input(BenchmarkId::new(format!("sin/{name}"), n), &a, |bch, a| {
                bch.iter(|| f.sin(black_box(a)).unwrap())
            });
            group.bench_with_input(BenchmarkId::new(format!("mul/{name}"), n), &(&a, &b), |bch, (a, b)| {
                bch.iter(|| f.mul(black_box(*a), black_box(*b)).unwrap())
            });
        }
    }
    parallel::set_enabled(true);
    group.finish();
}

fn bench_matmul(c: &mut Criterion) {
    let f = host();
    let mut group = c.benchmark_group("matmul");
    group.sample_size(20);
    for side in [64usize, 256] {
        let a = f.random_uniform(-1.0, 1.0, &[side, side], 3).unwrap();
        let b = f.random_uniform(-1.0, 1.0, &[side, side], 4).unwrap();
        group.throughput(Throughput::Elements((side * side * side) as u64));
        for (name, on) in variants() {
            parallel::set_enabled(on);
            group.bench_with_input(BenchmarkId::new(name, side), &(&a, &b), |bch, (a, b)| {
                bch.iter(|| f.matmul(black_box(*a), black_box(*b)).unwrap())
            });
        }
    }
    parallel::set_enabled(true);
    group.finish();
}

fn bench_broadcast(c: &mut Criterion) {
    let f = host();
    let mut group = c.benchmark_group("broadcast_add");
    let rows = 1024;
    let a = f.random_uniform(-1.0, 1.0, &[rows, 256], 5).unwrap();
    let b = f.random_uniform(-1.0, 1.0, &[256], 6).unwrap();
    group.throughput(Throughput::Elements((rows * 256) as u64));
    for (name, on) in variants() {
        parallel::set_enabled(on);
        group.bench_function(name, |bch| bch.iter(|| f.add(black_box(&a), black_box(&b)).unwrap()));
    }
    parallel::set_enabled(true);
    group.finish();
}

criterion_group!(benches, bench_elementwise, bench_matmul, bench_broadcast);
criterion_main!(benches);
