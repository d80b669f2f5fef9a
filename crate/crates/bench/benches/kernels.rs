use anova_fourier::lattice::{cbc_construct, lattice_adjoint, lattice_evaluate, CbcOptions};
use anova_fourier::operator::{lsqr, uniform_nodes, DirectOperator, FourierOperator, LsqrOptions};
use anova_fourier::{CoefficientMap, Frequency};
use anova_fourier_bench::{coefficients, grid_set};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn direct_operator(c: &mut Criterion) {
    let mut g = c.benchmark_group("direct_operator");
    g.sample_size(10);
    let set = grid_set(9, &[32, 8]);
    for m in [2_000usize, 8_000] {
        let nodes = uniform_nodes(9, m, 1).unwrap();
        let op = DirectOperator::new(&nodes, &set).unwrap();
        let x = coefficients(set.len());
        let y = op.forward(&x);
        g.bench_with_input(BenchmarkId::new("forward", m), &m, |b, _| b.iter(|| op.forward(black_box(&x))));
        g.bench_with_input(BenchmarkId::new("adjoint", m), &m, |b, _| b.iter(|| op.adjoint(black_box(&y))));
    }
    g.finish();
}

fn lsqr_fit(c: &mut Criterion) {
    let mut g = c.benchmark_group("lsqr");
    g.sample_size(10);
    let set = grid_set(6, &[16, 4]);
    let nodes = uniform_nodes(6, 4 * set.len(), 2).unwrap();
    let op = DirectOperator::new(&nodes, &set).unwrap();
    let y = op.forward(&coefficients(set.len()));
    let opts = LsqrOptions::default();
    g.bench_function("direct", |b| b.iter(|| lsqr(&op, black_box(&y), &opts).unwrap()));
    g.finish();
}

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice");
    g.sample_size(10);
    let set = grid_set(9, &[32, 8]);
    let freqs: Vec<Frequency> = set.frequencies().collect();
    g.bench_function("cbc", |b| b.iter(|| cbc_construct(black_box(&freqs), &CbcOptions::default()).unwrap()));
    let lat = cbc_construct(&freqs, &CbcOptions::default()).unwrap();
    let map = CoefficientMap::new(set.clone(), coefficients(set.len())).unwrap();
    let values = lattice_evaluate(&map, &lat);
    g.bench_function("evaluate", |b| b.iter(|| lattice_evaluate(black_box(&map), &lat)));
    g.bench_function("adjoint", |b| b.iter(|| lattice_adjoint(black_box(&values), &set, &lat).unwrap()));
    g.finish();
}

criterion_group!(benches, direct_operator, lsqr_fit, lattice);
criterion_main!(benches);
