//! Sequential vs data-parallel execution of the hot kernels. Run with
//! `cargo bench -p bidomain`; with `--no-default-features` only the
//! sequential variants exist.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use bidomain::assembly::{assemble_stiffness, cg_solve, CgOptions, SparseOperator};
use bidomain::exec::Exec;
use bidomain::forward::{simulate, Stepper, SystemKind};
use bidomain::grid::{Grid, TensorField};
use bidomain::ionic::IonicModel;
use bidomain::presets::{desk_problem, DeskSetup};

fn strategies() -> Vec<(&'static str, Exec)> {
    vec![
        ("sequential", Exec::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Exec::Parallel),
    ]
}

fn stiffness(n: usize) -> SparseOperator {
    let g = Grid::unit_square(n, 1.0, 1).unwrap();
    assemble_stiffness(&g, &TensorField::diagonal(g, &[1.0, 0.3]).unwrap()).unwrap()
}

fn spmv(c: &mut Criterion) {
    let mut group = c.benchmark_group("spmv");
    for n in [129, 257] {
        let k = stiffness(n);
        let x: Vec<f64> = (0..k.n()).map(|i| (i as f64).sin()).collect();
        let mut y = vec![0.0; k.n()];
        for (name, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| k.apply_with(exec, black_box(&x), &mut y))
            });
        }
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("dot");
    let len = 1 << 18;
    let a: Vec<f64> = (0..len).map(|i| (i as f64).cos()).collect();
    for (name, exec) in strategies() {
        group.bench_function(name, |b| b.iter(|| exec.sum(len, |i| a[i] * a[i])));
    }
    group.finish();
}

fn mass_shifted_cg(c: &mut Criterion) {
    let k = stiffness(129);
    let g = Grid::unit_square(129, 1.0, 1).unwrap();
    let a = k.scaled_plus_diag(1e-3, &g.weights());
    let rhs: Vec<f64> = (0..a.n()).map(|i| ((i % 97) as f64 - 48.0) * 1e-4).collect();
    c.bench_function("cg/129x129 (default strategy)", |b| {
        b.iter(|| cg_solve(&a, black_box(&rhs), None, &CgOptions::default()).unwrap())
    });
}

fn forward_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_step");
    group.sample_size(20);
    for kind in [SystemKind::Monodomain, SystemKind::Bidomain] {
        let g = Grid::unit_square(65, 1.0, 100).unwrap();
        let cfg = desk_problem(kind, IonicModel::RogersMcCulloch, g, &DeskSetup::default()).unwrap();
        let stepper = Stepper::new(&cfg);
        let s0 = stepper.initial_state().unwrap();
        let s1 = stepper.step(&s0, 0).unwrap();
        group.bench_function(format!("{kind:?}"), |b| b.iter(|| stepper.step(black_box(&s1), 1).unwrap()));
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    let g = Grid::unit_interval(129, 1.0, 200).unwrap();
    let configs: Vec<_> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        .iter()
        .map(|&amplitude| {
            let setup = DeskSetup { amplitude, ..DeskSetup::default() };
            desk_problem(SystemKind::Monodomain, IonicModel::AlievPanfilov, g, &setup).unwrap()
        })
        .collect();
    for (name, exec) in strategies() {
        group.bench_function(name, |b| b.iter(|| exec.map(&configs, |c| simulate(c).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, spmv, reduction, mass_shifted_cg, forward_step, ensemble);
criterion_main!(benches);
