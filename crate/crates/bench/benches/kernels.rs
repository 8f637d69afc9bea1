use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use exitdp::gallery;
use exitdp::shaking::{mollify, solve_shaken, ShakingConfig};
use exitdp::simulate::{payoff_mc, PathConfig, Policy};
use exitdp::solve::{solve_with, LatticeOptions};
use exitdp::ControlId;

fn lattice_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let smooth = gallery::smooth_benchmark();
    for h in [0.05, 0.025] {
        group.bench_with_input(BenchmarkId::new("smooth_benchmark", h), &h, |b, &h| {
            b.iter(|| solve_with(&smooth, &LatticeOptions::new(h), 1, 0.0).unwrap())
        });
    }
    let annulus = gallery::two_control_annulus();
    group.bench_function("two_control_annulus/0.1", |b| {
        b.iter(|| solve_with(&annulus, &LatticeOptions::new(0.1), 1, 0.0).unwrap())
    });
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    let inst = gallery::brownian_annulus();
    let policy = Policy::Constant(ControlId(0));
    let cfg = PathConfig::for_instance(&inst, 1e-3, 1000, 1);
    group.bench_function("brownian_annulus/1000_paths", |b| {
        b.iter(|| payoff_mc(&inst, &policy, 0.0, black_box(&[1.5, 0.0]), 0.0, &cfg).unwrap())
    });
    group.finish();
}

fn shaking(c: &mut Criterion) {
    let mut group = c.benchmark_group("shaking");
    group.sample_size(10);
    let inst = gallery::smooth_benchmark();
    let cfg = ShakingConfig::new(0.2).unwrap();
    let (_, vd) = solve_shaken(&inst, &cfg, &LatticeOptions::new(0.025), 4).unwrap();
    group.bench_function("mollify/smooth_0.025", |b| {
        b.iter(|| mollify(black_box(&vd), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, lattice_solve, monte_carlo, shaking);
criterion_main!(benches);
