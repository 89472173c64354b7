use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::Vector3;
use rvp_core::characteristics::{integrate_to, RadialFn};
use rvp_core::ineq::{default_family, lhs, rhs, RhsConfig};
use rvp_core::poisson::solve_field;
use rvp_core::symkernel::verify_identity_catalog;
use rvp_core::{CharState, InitialData, ParticleEnsemble, RadialGrid};
use std::hint::black_box;

fn algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("algebra");
    g.sample_size(10);
    g.bench_function("identity catalog", |b| b.iter(verify_identity_catalog));
    g.finish();
}

fn poisson(c: &mut Criterion) {
    let grid = RadialGrid::new(100.0, 2000);
    let rho: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
    c.bench_function("solve_field 2000 cells", |b| {
        b.iter(|| solve_field(grid, black_box(&rho)))
    });
}

fn characteristics(c: &mut Criterion) {
    let field = RadialFn {
        sigma: 1.0,
        profile: |_t: f64, r: f64| {
            let q = 1.0 + r * r;
            (r / q.powf(1.5), q.powf(-1.5) - 3.0 * r * r * q.powf(-2.5))
        },
    };
    let s = CharState::new(0.0, [1.0, 0.5, -0.2], [2.0, -1.0, 0.5]).with_tangent();
    c.bench_function("tangent flow to t=10", |b| {
        b.iter(|| integrate_to(black_box(&s), &field, 10.0, 0.01).unwrap())
    });
}

fn particles(c: &mut Criterion) {
    let init = InitialData::default();
    let grid = RadialGrid::new(100.0, 2000);
    let mut g = c.benchmark_group("particles");
    g.sample_size(10);
    g.bench_function("sample 1e4", |b| {
        b.iter(|| ParticleEnsemble::sample(&init, 10_000, 1, false).unwrap())
    });
    let ens = ParticleEnsemble::sample(&init, 10_000, 1, false).unwrap();
    g.bench_function("deposit 1e4", |b| b.iter(|| ens.deposit(black_box(&grid))));
    let field = solve_field(grid, &ens.deposit(&grid).rho);
    g.bench_function("kdk step 1e4", |b| {
        b.iter_batched(
            || ens.clone(),
            |mut e| e.step(&grid, &field, 0.05, 1.0).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn inequality(c: &mut Criterion) {
    let family = default_family();
    let g0 = &family[0];
    let mut g = c.benchmark_group("inequality");
    g.sample_size(10);
    g.bench_function("lhs at r=t", |b| {
        b.iter(|| lhs(g0, 5.0, &Vector3::new(0.0, 0.0, 5.0), 1e-6))
    });
    let cfg = RhsConfig {
        level: 4,
        ..RhsConfig::default()
    };
    g.bench_function("rhs level 4", |b| b.iter(|| rhs(g0, 5.0, &[0, 2], &cfg)));
    g.finish();
}

criterion_group!(benches, algebra, poisson, characteristics, particles, inequality);
criterion_main!(benches);
