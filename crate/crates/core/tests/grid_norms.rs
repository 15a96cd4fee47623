use bidomain::assembly::SystemOperators;
use bidomain::grid::{
    bochner_norm, dual_norm, h1_norm, integrate, lp_norm, read_series, write_series, zero_mean_project, FieldSeries,
    Grid, ScalarField, SpatialNorm, TensorField, TimeExponent,
};
use proptest::prelude::*;

fn riesz_for(g: Grid) -> bidomain::assembly::SparseOperator {
    let ops = SystemOperators::proportional(TensorField::isotropic(g, 1.0).unwrap(), 1.0).unwrap();
    ops.riesz().clone()
}

fn field(g: Grid, values: &[f64]) -> ScalarField {
    ScalarField::new(g, values[..g.n_nodes()].to_vec()).unwrap()
}

/// Nodal weights rebuilt from the trapezoid rule per axis.
fn trapezoid_weights(g: &Grid) -> Vec<f64> {
    let n = g.nodes3();
    let axis_w = |a: usize, i: usize| {
        if a >= g.dim() {
            return 1.0;
        }
        let h = g.h(a);
        if i == 0 || i == n[a] - 1 { 0.5 * h } else { h }
    };
    (0..g.n_nodes())
        .map(|idx| {
            let ijk = g.node_ijk(idx);
            (0..3).map(|a| axis_w(a, ijk[a])).product()
        })
        .collect()
}

#[test]
fn constant_integrates_exactly() {
    for n in [2, 5, 17] {
        let g = Grid::unit_square(n, 1.0, 1).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 1.0).abs() < 1e-14);
    }
    let g = Grid::new(&[4, 3, 5], &[2.0, 0.5, 3.0], 1.0, 1).unwrap();
    assert!((integrate(&ScalarField::constant(g, 1.0)) - 3.0).abs() < 1e-13);
}

#[test]
fn linear_field_integrates_exactly() {
    let g = Grid::unit_interval(65, 1.0, 1).unwrap();
    assert!((integrate(&ScalarField::from_fn(g, |x| x[0])) - 0.5).abs() < 1e-12);
}

#[test]
fn simple_norm_values() {
    let g = Grid::unit_square(9, 1.0, 1).unwrap();
    for p in [1.0, 2.0, 3.0, 4.0] {
        assert!((lp_norm(&ScalarField::constant(g, -2.5), p) - 2.5).abs() < 1e-13);
        assert_eq!(lp_norm(&ScalarField::zeros(g), p), 0.0);
    }
    let c = ScalarField::constant(g, 3.0);
    assert!((h1_norm(&c) - lp_norm(&c, 2.0)).abs() < 1e-13);
    assert_eq!(h1_norm(&ScalarField::zeros(g)), 0.0);
    let alt = ScalarField::from_fn(g, |x| if ((x[0] + x[1]) * 8.0).round() as i64 % 2 == 0 { 1.0 } else { -1.0 });
    assert!((lp_norm(&alt, 2.0) - 1.0).abs() < 1e-13);
}

#[test]
fn h1_of_linear_function_converges() {
    let exact = (1.0f64 / 3.0 + 1.0).sqrt();
    let errs: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&n| {
            let g = Grid::unit_interval(n, 1.0, 1).unwrap();
            (h1_norm(&ScalarField::from_fn(g, |x| x[0])) - exact).abs()
        })
        .collect();
    assert!(errs[2] < 1e-4, "{errs:?}");
    assert!(errs[2] < errs[0]);
}

#[test]
fn bochner_examples() {
    let g = Grid::unit_interval(9, 2.0, 2).unwrap();
    let frames = [1.0, 3.0, 2.0].iter().map(|&c| ScalarField::constant(g, c)).collect();
    let s = FieldSeries::new(g, frames).unwrap();
    assert_eq!(bochner_norm(&s, TimeExponent::Inf, SpatialNorm::L2), 3.0);
    let g = Grid::unit_interval(9, 2.0, 8).unwrap();
    let s = FieldSeries::from_fn(g, |_, _| 1.5);
    assert!((bochner_norm(&s, TimeExponent::P(2.0), SpatialNorm::L2) - 1.5 * 2f64.sqrt()).abs() < 1e-13);
}

#[test]
fn dual_norm_of_constant_is_its_value() {
    let g = Grid::unit_square(9, 1.0, 1).unwrap();
    let r = riesz_for(g);
    assert!((dual_norm(&ScalarField::constant(g, -0.7), &r).unwrap() - 0.7).abs() < 1e-9);
    assert_eq!(dual_norm(&ScalarField::zeros(g), &r).unwrap(), 0.0);
}

#[test]
fn zero_mean_examples() {
    let g = Grid::unit_interval(33, 1.0, 1).unwrap();
    assert!(zero_mean_project(&ScalarField::constant(g, 5.0)).max_abs() < 1e-14);
    let p = zero_mean_project(&ScalarField::from_fn(g, |x| x[0]));
    let expected = ScalarField::from_fn(g, |x| x[0] - 0.5);
    assert!(p.zip_map(&expected, |a, b| a - b).max_abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integrate_matches_direct_weighted_sum(n in 2usize..7, m in 2usize..7, values in prop::collection::vec(-5.0f64..5.0, 49)) {
        let g = Grid::new(&[n, m], &[1.5, 0.75], 1.0, 1).unwrap();
        let f = field(g, &values);
        let direct: f64 = trapezoid_weights(&g).iter().zip(f.values()).map(|(w, v)| w * v).sum();
        prop_assert!((integrate(&f) - direct).abs() <= 1e-14 * (1.0 + direct.abs()) * 10.0);
        let total: f64 = trapezoid_weights(&g).iter().sum();
        prop_assert!((total - g.measure()).abs() < 1e-14);
    }

    #[test]
    fn lp_norm_is_homogeneous(values in prop::collection::vec(-3.0f64..3.0, 25), alpha in -10.0f64..10.0, p in 1.0f64..5.0) {
        let g = Grid::unit_square(5, 1.0, 1).unwrap();
        let f = field(g, &values);
        let lhs = lp_norm(&f.scaled(alpha), p);
        let rhs = alpha.abs() * lp_norm(&f, p);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + rhs));
    }

    #[test]
    fn bochner_sup_is_max_of_frames(values in prop::collection::vec(-3.0f64..3.0, 9 * 5)) {
        let g = Grid::unit_interval(9, 1.0, 4).unwrap();
        let frames: Vec<ScalarField> = values.chunks(9).map(|c| ScalarField::new(g, c.to_vec()).unwrap()).collect();
        let s = FieldSeries::new(g, frames).unwrap();
        let max = s.frames().iter().map(|f| lp_norm(f, 2.0)).fold(0.0, f64::max);
        prop_assert_eq!(bochner_norm(&s, TimeExponent::Inf, SpatialNorm::L2), max);
        // Trapezoid-weighted Riemann sum.
        let sum: f64 = s.frames().iter().enumerate().map(|(k, f)| {
            let w = if k == 0 || k == 4 { 0.5 } else { 1.0 } * g.dt();
            w * lp_norm(f, 2.0).powi(2)
        }).sum();
        let b = bochner_norm(&s, TimeExponent::P(2.0), SpatialNorm::L2);
        prop_assert!((b - sum.sqrt()).abs() <= 1e-13 * (1.0 + b));
    }

    #[test]
    fn zero_mean_is_linear_and_idempotent(a in prop::collection::vec(-3.0f64..3.0, 25), b in prop::collection::vec(-3.0f64..3.0, 25), s in -4.0f64..4.0) {
        let g = Grid::unit_square(5, 1.0, 1).unwrap();
        let (fa, fb) = (field(g, &a), field(g, &b));
        let pa = zero_mean_project(&fa);
        prop_assert!(integrate(&pa).abs() < 1e-12);
        prop_assert!(zero_mean_project(&pa).zip_map(&pa, |x, y| x - y).max_abs() < 1e-13);
        let combo = fa.zip_map(&fb, |x, y| x + s * y);
        let lhs = zero_mean_project(&combo);
        let rhs = pa.zip_map(&zero_mean_project(&fb), |x, y| x + s * y);
        prop_assert!(lhs.zip_map(&rhs, |x, y| x - y).max_abs() < 1e-13);
    }

    #[test]
    fn dual_norm_is_bounded_by_l2(values in prop::collection::vec(-3.0f64..3.0, 81)) {
        let g = Grid::unit_square(9, 1.0, 1).unwrap();
        let f = field(g, &values);
        let d = dual_norm(&f, &riesz_for(g)).unwrap();
        prop_assert!(d <= lp_norm(&f, 2.0) + 1e-10);
    }

    #[test]
    fn snapshot_roundtrip(values in prop::collection::vec(-1e3f64..1e3, 7 * 4)) {
        let g = Grid::unit_interval(7, 1.0, 3).unwrap();
        let frames: Vec<ScalarField> = values.chunks(7).map(|c| ScalarField::new(g, c.to_vec()).unwrap()).collect();
        let s = FieldSeries::new(g, frames).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bdmf");
        write_series(&path, &s).unwrap();
        prop_assert_eq!(read_series(&path, &g).unwrap(), s);
    }
}
