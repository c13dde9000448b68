use std::f64::consts::E;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use loupe_bench::{concentric_pair, small_exterior, unit_annulus};
use loupe_core::bubble::rho;
use loupe_core::geometry::{c64, CompactSet, C64};
use loupe_core::kernels::{boundary_poisson_annulus, harm_annulus, poisson_disk, Side};
use loupe_core::lambda_star::{lambda_star, Schedule};
use loupe_core::loops::{loop_mass, loop_mass_circles, Engine, LoopMassQuery};
use loupe_core::mc::hitting_prob;
use loupe_core::sle::{exponents, whole_plane_sample, SampleOptions};

fn exact(c: &mut Criterion) {
    c.bench_function("poisson_disk", |b| b.iter(|| poisson_disk(black_box(c64(0.3, -0.4)), C64::from_polar(1.0, 0.7))));
    c.bench_function("harm_annulus", |b| b.iter(|| harm_annulus(black_box(c64(2.0, 0.0)), 1.0, 10.0, Side::Outer)));
    c.bench_function("boundary_poisson_annulus", |b| b.iter(|| boundary_poisson_annulus(black_box(10.0), 0.3)));
    c.bench_function("rho", |b| b.iter(|| rho(black_box(100.0))));
}

fn monte_carlo(c: &mut Criterion) {
    let d = unit_annulus();
    let outer10 = CompactSet::circle(0.0, 0.0, 10.0).unwrap();
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(10);
    g.bench_function("hitting_prob_1e3", |b| b.iter(|| hitting_prob(&d, c64(2.0, 0.0), &outer10, 1_000, black_box(7))));
    g.finish();
}

fn loops(c: &mut Criterion) {
    let (inner, outer) = concentric_pair();
    let mut g = c.benchmark_group("loops");
    g.sample_size(10);
    g.bench_function("loop_mass_circles", |b| b.iter(|| loop_mass_circles(black_box(0.01), 100.0)));
    let q = LoopMassQuery { sets: vec![inner.clone(), outer.clone()], domain: small_exterior(), engine: Engine::Determinant };
    g.bench_function("loop_mass_determinant", |b| b.iter(|| loop_mass(&q, black_box(1))));
    let outer_e = CompactSet::circle(0.0, 0.0, E.exp()).unwrap();
    g.bench_function("lambda_star_default", |b| b.iter(|| lambda_star(&inner, &outer_e, &Schedule::default(), Engine::Determinant, black_box(1))));
    g.finish();
}

fn sle(c: &mut Criterion) {
    let p = exponents(2.0).unwrap();
    let opts = SampleOptions { dt: 1e-3, ..SampleOptions::default() };
    let mut g = c.benchmark_group("sle");
    g.sample_size(10);
    g.bench_function("whole_plane_sample_dt1e-3", |b| b.iter(|| whole_plane_sample(&p, (-4.0f64).exp(), &opts, black_box(3))));
    g.finish();
}

criterion_group!(benches, exact, monte_carlo, loops, sle);
criterion_main!(benches);
