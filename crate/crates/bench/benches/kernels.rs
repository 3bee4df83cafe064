use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pmodulus::oracle::{solve_discrete, SolverSettings};
use pmodulus::{generalized_norm, modulus_p, Exponent, QuadratureScheme};
use pmodulus_bench::{oracle_problem, radial_family, test_matrix};
use std::hint::black_box;

fn bench_norm(c: &mut Criterion) {
    let mut group = c.benchmark_group("generalized_norm");
    for (rows, cols) in [(2, 1), (4, 2), (6, 4), (12, 6)] {
        let a = test_matrix(rows, cols);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{rows}x{cols}")),
            &a,
            |b, a| b.iter(|| generalized_norm(black_box(a))),
        );
    }
    group.finish();
}

fn bench_modulus(c: &mut Criterion) {
    let family = radial_family();
    let p = Exponent::new(2.0).unwrap();
    let mut group = c.benchmark_group("modulus_p");
    for subdivisions in [1, 4, 8] {
        let quad = QuadratureScheme::gauss_legendre(8, subdivisions).unwrap();
        group.bench_with_input(
            BenchmarkId::new("annulus", subdivisions),
            &quad,
            |b, quad| b.iter(|| modulus_p(black_box(&family), p, quad).unwrap()),
        );
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_discrete");
    group.sample_size(10);
    let settings = SolverSettings {
        tolerance: 1e-5,
        ..SolverSettings::default()
    };
    for cells in [16, 32, 64] {
        let problem = oracle_problem(cells);
        group.bench_with_input(
            BenchmarkId::new("annulus", cells),
            &problem,
            |b, problem| b.iter(|| solve_discrete(black_box(problem), &settings).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_norm, bench_modulus, bench_oracle);
criterion_main!(benches);
