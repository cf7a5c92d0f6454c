use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fenergy::born_infeld::{solve_radial, Sign};
use fenergy::chern::cmc_flux;
use fenergy::energy::ball_energy;
use fenergy::fields::div_stress;
use fenergy::FProfile;
use fenergy_bench::{catenoid_grid, planar_one_form, profiles, sech_field};

fn stress_divergence(c: &mut Criterion) {
    let mut g = c.benchmark_group("div_stress");
    for n in [33, 65, 129] {
        let w = planar_one_form(n);
        for prof in profiles() {
            g.bench_with_input(BenchmarkId::new(prof.name().to_string(), n), &w, |b, w| {
                b.iter(|| div_stress(black_box(w), &prof).unwrap())
            });
        }
    }
    g.finish();
}

fn radial_energy(c: &mut Criterion) {
    let fld = sech_field();
    let prof = FProfile::bi_plus();
    c.bench_function("ball_energy/sech/rho=5", |b| b.iter(|| ball_energy(&fld, &prof, black_box(5.0)).unwrap()));
}

fn radial_solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_radial");
    for n in [1024, 8192] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| solve_radial(2, Sign::Plus, 1.0, (1.5, 4.0), black_box(n)).unwrap())
        });
    }
    g.finish();
}

fn flux(c: &mut Criterion) {
    let w = catenoid_grid(1.0 / 64.0);
    c.bench_function("cmc_flux/catenoid/h=1/64", |b| {
        b.iter(|| cmc_flux(black_box(&w), &[0, 1], &[0.0, 0.0], &[1.5, 2.0, 2.5, 3.0]).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = stress_divergence, radial_energy, radial_solver, flux
}
criterion_main!(benches);
