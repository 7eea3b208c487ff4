use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use remoteop_core::gates::{hadamard, GateMatrix};
use remoteop_core::random::{random_hybrid, random_state, random_unitary, seeded};
use remoteop_core::restricted::{classify, decompose};
use remoteop_core::{run_protocol, run_sampled, Protocol};

fn gate_application(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_gate");
    let mut rng = seeded(1);
    let h = hadamard();
    let two = GateMatrix::new(random_unitary(4, &mut rng)).unwrap();
    for n in [8usize, 12, 16] {
        let psi = random_state(n, &mut rng);
        group.bench_with_input(BenchmarkId::new("single", n), &psi, |b, psi| {
            b.iter(|| psi.apply_gate(&h, &[n / 2]).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pair", n), &psi, |b, psi| {
            b.iter(|| psi.apply_gate(&two, &[0, n - 1]).unwrap())
        });
    }
    group.finish();
}

fn hybrid_protocol(c: &mut Criterion) {
    let mut group = c.benchmark_group("hybrid");
    group.sample_size(10);
    for (n, m) in [(1usize, 0usize), (1, 1), (2, 0), (2, 1)] {
        let mut rng = seeded(2);
        let op = random_hybrid(n, m, &mut rng);
        let xi = random_state(n + m, &mut rng);
        group.bench_function(BenchmarkId::new("enumerate", format!("{n}x{m}")), |b| {
            b.iter(|| run_protocol(Protocol::Hybrid, black_box(&op), &xi).unwrap())
        });
        group.bench_function(BenchmarkId::new("sample", format!("{n}x{m}")), |b| {
            let mut draw = seeded(3);
            b.iter(|| run_sampled(Protocol::Hybrid, black_box(&op), &xi, &mut draw).unwrap())
        });
    }
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    for (n, m) in [(1usize, 1usize), (2, 1), (2, 2), (3, 1)] {
        let mut rng = seeded(4);
        let u = random_hybrid(n, m, &mut rng).build().unwrap();
        group.bench_function(BenchmarkId::new("fixed", format!("{n}x{m}")), |b| {
            b.iter(|| decompose(black_box(u.matrix()), n, m).unwrap())
        });
        group.bench_function(BenchmarkId::new("classify", format!("{n}x{m}")), |b| {
            b.iter(|| classify(black_box(&u)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gate_application, hybrid_protocol, decomposition);
criterion_main!(benches);
