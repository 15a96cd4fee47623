#![cfg(feature = "parallel")]

use bidomain::assembly::assemble_stiffness;
use bidomain::exec::Exec;
use bidomain::forward::{simulate, SystemKind};
use bidomain::grid::{Grid, TensorField};
use bidomain::ionic::IonicModel;
use bidomain::presets::{desk_problem, DeskSetup};

#[test]
fn spmv_and_reductions_agree_bitwise() {
    let g = Grid::unit_square(101, 1.0, 1).unwrap();
    let k = assemble_stiffness(&g, &TensorField::diagonal(g, &[1.0, 0.2]).unwrap()).unwrap();
    let x: Vec<f64> = (0..k.n()).map(|i| (0.37 * i as f64).sin()).collect();
    let mut a = vec![0.0; k.n()];
    let mut b = vec![0.0; k.n()];
    k.apply_with(Exec::Sequential, &x, &mut a);
    k.apply_with(Exec::Parallel, &x, &mut b);
    assert_eq!(a, b);
    let f = |i: usize| x[i] * a[i];
    assert_eq!(Exec::Sequential.sum(x.len(), f).to_bits(), Exec::Parallel.sum(x.len(), f).to_bits());
}

#[test]
fn ensemble_map_agrees_with_sequential_runs() {
    let g = Grid::unit_interval(33, 1.0, 30).unwrap();
    let configs: Vec<_> = [2.0, 4.0, 6.0]
        .iter()
        .map(|&amplitude| {
            desk_problem(SystemKind::Bidomain, IonicModel::RogersMcCulloch, g, &DeskSetup { amplitude, ..DeskSetup::default() }).unwrap()
        })
        .collect();
    let seq = Exec::Sequential.map(&configs, |c| simulate(c).unwrap());
    let par = Exec::Parallel.map(&configs, |c| simulate(c).unwrap());
    assert_eq!(seq, par);
}
