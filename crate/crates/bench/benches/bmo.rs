use std::collections::BTreeMap;

use bmo_core::{
    bmo_seminorm, check_features, decompose, verify_jn, DyadicCube, GeneratorKind, GridFunction,
    GridShape, RootCube,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn martingale(n: usize, levels: u32) -> GridFunction {
    let shape = GridShape::new(RootCube::unit(n), levels).unwrap();
    GridFunction::generate(GeneratorKind::DyadicMartingale, shape, &BTreeMap::new(), 42).unwrap()
}

fn seminorm(c: &mut Criterion) {
    let mut group = c.benchmark_group("bmo_seminorm");
    for (n, levels) in [(1, 12), (1, 16), (2, 6), (2, 8), (3, 5)] {
        let f = martingale(n, levels);
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), levels), &f, |b, f| {
            b.iter(|| bmo_seminorm(f))
        });
    }
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    for (n, levels) in [(1, 12), (2, 7)] {
        let f = martingale(n, levels);
        let root = DyadicCube::root(n);
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), levels), &f, |b, f| {
            b.iter(|| decompose(f, &root, 1.1, 5).unwrap())
        });
        let d = decompose(&f, &root, 1.1, 5).unwrap();
        group.bench_with_input(
            BenchmarkId::new(format!("features_n{n}"), levels),
            &f,
            |b, f| b.iter(|| check_features(f, &d).unwrap()),
        );
    }
    group.finish();
}

fn john_nirenberg(c: &mut Criterion) {
    let f = martingale(2, 7);
    let norm = bmo_seminorm(&f).value;
    let root = DyadicCube::root(2);
    c.bench_function("verify_jn n2 L7 200 steps", |b| {
        b.iter(|| verify_jn(&f, &root, 10.0 * norm, 200).unwrap())
    });
}

criterion_group!(benches, seminorm, decomposition, john_nirenberg);
criterion_main!(benches);
