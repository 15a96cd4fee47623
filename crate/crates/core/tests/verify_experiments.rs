use std::sync::Arc;

use bidomain::adjoint::{solve_adjoint, CostConfig};
use bidomain::assembly::SystemOperators;
use bidomain::forward::{simulate, ProblemConfig, SystemKind};
use bidomain::grid::{FieldSeries, Grid, ScalarField, TensorField};
use bidomain::ionic::{IonicModel, IonicParams};
use bidomain::presets::{desk_problem, pulse, rest_problem, DeskSetup};
use bidomain::verify::{
    adjoint_apriori_check, apriori_check, convergence_study, difference_bundle, inject, monodomain_limit_check,
    observed_orders, regularity_monitor, stability_experiment, Verdict,
};
use bidomain::Error;

#[test]
fn stability_rejects_degenerate_input() {
    let g = Grid::unit_interval(9, 1.0, 5).unwrap();
    let cfg = rest_problem(SystemKind::Monodomain, IonicModel::RogersMcCulloch, g).unwrap();
    let z = FieldSeries::zeros(g);
    let d = pulse(&g, 1.0, &[0.5], 0.2, 0.0, 1.0);
    assert!(matches!(stability_experiment(&cfg, &z, &z, &[1.0]), Err(Error::Degenerate(_))));
    assert!(matches!(stability_experiment(&cfg, &d, &z, &[1.0, 0.0]), Err(Error::Degenerate(_))));
    assert!(matches!(stability_experiment(&cfg, &d, &z, &[]), Err(Error::Degenerate(_))));
}

#[test]
fn stability_report_and_uniqueness() {
    let g = Grid::unit_interval(33, 1.0, 40).unwrap();
    let cfg = desk_problem(SystemKind::Bidomain, IonicModel::AlievPanfilov, g, &DeskSetup::default()).unwrap();
    let a = simulate(&cfg).unwrap();
    assert_eq!(difference_bundle(&a, &simulate(&cfg).unwrap(), SystemKind::Bidomain), 0.0);
    // A non-compatible perturbation is adjusted rather than rejected.
    let r = stability_experiment(&cfg, &pulse(&g, 0.5, &[0.6], 0.1, 0.0, 0.5), &FieldSeries::zeros(g), &[1.0, 0.5]).unwrap();
    assert!(r.points.iter().all(|p| p.lhs > 0.0 && p.rhs > 0.0 && p.ratio.is_finite()));
    assert!(r.to_csv().starts_with("scale,lhs,rhs,ratio\n"));
}

fn two_tensor_config(g: Grid, ratio: f64, lambda: f64) -> ProblemConfig {
    let m_i = TensorField::isotropic(g, 0.1).unwrap();
    let m_e = TensorField::diagonal(g, &[0.1 * ratio, 0.05 * ratio]).unwrap();
    let ops = Arc::new(SystemOperators::new(m_i, m_e, lambda).unwrap());
    ProblemConfig::new(
        SystemKind::Bidomain,
        ops,
        IonicParams::new(IonicModel::RogersMcCulloch),
        ScalarField::zeros(g),
        ScalarField::zeros(g),
        FieldSeries::zeros(g),
        FieldSeries::zeros(g),
    )
    .unwrap()
}

#[test]
fn limit_check_examples() {
    let g = Grid::unit_square(9, 1.0, 10).unwrap();
    assert!(matches!(monodomain_limit_check(&two_tensor_config(g, 1.0, 1.0)), Err(Error::Config(_))));
    let m_i = TensorField::isotropic(g, 0.1).unwrap();
    let ops = Arc::new(SystemOperators::new(m_i.clone(), m_i.scaled(2.0).unwrap(), 1.0).unwrap());
    let cfg = rest_problem(SystemKind::Bidomain, IonicModel::RogersMcCulloch, g).unwrap();
    let mismatched = ProblemConfig::new(SystemKind::Bidomain, ops, *cfg.ionic(), cfg.phi0().clone(), cfg.w0().clone(), cfg.i_i().clone(), cfg.i_e().clone()).unwrap();
    assert!(matches!(monodomain_limit_check(&mismatched), Err(Error::Config(_))));
    assert_eq!(monodomain_limit_check(&cfg).unwrap(), 0.0);
}

#[test]
fn regularity_monitor_examples() {
    let g = Grid::unit_interval(17, 1.0, 20).unwrap();
    let rest = rest_problem(SystemKind::Monodomain, IonicModel::RogersMcCulloch, g).unwrap();
    let t = simulate(&rest).unwrap();
    let r = regularity_monitor(&t, &t, &[rest.i_i(), rest.i_e()]);
    assert!(r.pass && r.coarse == 0.0 && r.refined == 0.0);

    let run = |n, s, amplitude| {
        let g = Grid::unit_interval(n, 1.0, s).unwrap();
        let setup = DeskSetup { amplitude, ..DeskSetup::default() };
        let cfg = desk_problem(SystemKind::Monodomain, IonicModel::RogersMcCulloch, g, &setup).unwrap();
        (simulate(&cfg).unwrap(), cfg)
    };
    let (coarse, cfg) = run(33, 50, 4.0);
    let (fine, _) = run(65, 100, 4.0);
    let r = regularity_monitor(&coarse, &fine, &[cfg.i_i(), cfg.i_e()]);
    assert!(r.pass && r.control_l4_l2.is_finite() && r.coarse > 0.0, "{r:?}");
    let (doubled, _) = run(33, 50, 8.0);
    let r2 = regularity_monitor(&doubled, &doubled, &[]);
    assert!(r2.coarse.is_finite() && r2.coarse > 0.0);
}

#[test]
fn apriori_zero_data_examples() {
    let g = Grid::unit_interval(17, 1.0, 10).unwrap();
    for kind in [SystemKind::Monodomain, SystemKind::Bidomain] {
        let cfg = rest_problem(kind, IonicModel::FitzHughNagumo, g).unwrap();
        let t = simulate(&cfg).unwrap();
        let r = apriori_check(&t, &cfg).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 1.0, 0.0));
        let cost = CostConfig::tracking(t.phi_tr.clone(), 1.0).unwrap();
        let adj = solve_adjoint(&t, &cfg, &cost).unwrap();
        let a = adjoint_apriori_check(&adj, &t, &cfg, &cost).unwrap();
        assert_eq!((a.lhs, a.ratio), (0.0, 0.0));
    }
}

#[test]
fn adjoint_apriori_constant_over_random_costs() {
    let g = Grid::unit_interval(33, 1.0, 50).unwrap();
    let cfg = desk_problem(SystemKind::Monodomain, IonicModel::RogersMcCulloch, g, &DeskSetup::default()).unwrap();
    let t = simulate(&cfg).unwrap();
    let ratios: Vec<f64> = [(0.10, 1.0), (0.13, 1.3), (0.08, 0.7)]
        .iter()
        .map(|&(amp, freq)| {
            let des = FieldSeries::from_fn(g, |x, s| amp * (std::f64::consts::PI * freq * x[0]).cos() * s);
            let cost = CostConfig::tracking(des, 1.0).unwrap();
            let adj = solve_adjoint(&t, &cfg, &cost).unwrap();
            adjoint_apriori_check(&adj, &t, &cfg, &cost).unwrap().ratio
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / 3.0;
    assert!(ratios.iter().all(|r| (r - mean).abs() <= 0.25 * mean), "{ratios:?}");
}

#[test]
fn convergence_verdicts() {
    let s = observed_orders(vec![9, 17, 33], vec![4e-2, 1e-2, 2.5e-3]);
    assert!(matches!(s.verdict, Verdict::Order(p) if (p - 2.0).abs() < 1e-12));
    assert!(s.to_csv().starts_with("resolution,error,order\n"));
    let same = observed_orders(vec![9, 9, 9], vec![0.0, 0.0]);
    assert!(matches!(same.verdict, Verdict::Inconclusive(_)));
    assert!(same.order().is_none());
    let bumpy = observed_orders(vec![9, 17, 33], vec![1e-2, 2e-2, 1e-3]);
    assert!(matches!(bumpy.verdict, Verdict::Inconclusive(_)));

    let build = |g: Grid| rest_problem(SystemKind::Monodomain, IonicModel::RogersMcCulloch, g);
    let g = Grid::unit_interval(5, 1.0, 4).unwrap();
    assert!(matches!(convergence_study(&build, g, 2), Err(Error::Config(_))));
    let (space, time) = convergence_study(&build, g, 3).unwrap();
    assert!(space.order().is_none() && time.order().is_none());
}

#[test]
fn injection_picks_coincident_nodes() {
    let fine = Grid::unit_square(9, 1.0, 1).unwrap();
    let coarse = Grid::unit_square(5, 1.0, 1).unwrap();
    let f = ScalarField::from_fn(fine, |x| x[0] + 10.0 * x[1]);
    assert_eq!(inject(&f, &coarse).unwrap(), ScalarField::from_fn(coarse, |x| x[0] + 10.0 * x[1]));
    assert!(inject(&f, &Grid::unit_square(4, 1.0, 1).unwrap()).is_err());
}
