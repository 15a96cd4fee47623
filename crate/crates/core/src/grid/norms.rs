use super::{FieldSeries, ScalarField};
use crate::assembly::{cg_solve, CgOptions, SparseOperator};
use crate::error::Result;
use crate::exec::Exec;

/// Spatial norm applied to each frame of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialNorm {
    L2,
    L4,
    H1,
}

/// Time exponent of a Bochner norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeExponent {
    P(f64),
    /// Max over frames.
    Inf,
}

/// Lumped quadrature `Σ w_i v_i`.
pub fn integrate(field: &ScalarField) -> f64 {
    let g = field.grid();
    let v = field.values();
    Exec::default().sum(v.len(), |i| g.weight(i) * v[i])
}

pub fn lp_norm(field: &ScalarField, p: f64) -> f64 {
    assert!(p >= 1.0 && p.is_finite(), "lp_norm needs finite p >= 1, got {p}");
    let g = field.grid();
    let v = field.values();
    let s = if p == 2.0 {
        Exec::default().sum(v.len(), |i| g.weight(i) * v[i] * v[i])
    } else {
        Exec::default().sum(v.len(), |i| g.weight(i) * v[i].abs().powf(p))
    };
    s.powf(1.0 / p)
}

/// `‖∇u‖²` with the gradient taken cell-centred: along each axis the
/// difference quotient averaged over the cell's parallel edges, integrated
/// with one point per cell.
pub fn h1_seminorm_sq(field: &ScalarField) -> f64 {
    let g = *field.grid();
    let v = field.values();
    let d = g.dim();
    let vol = g.cell_volume();
    let inv_h: Vec<f64> = (0..d).map(|a| 1.0 / g.h(a)).collect();
    let edges = (1usize << d) / 2;
    Exec::default().sum(g.n_cells(), |cell| {
        let corners = g.cell_corners(cell);
        let mut s = 0.0;
        for (a, ih) in inv_h.iter().enumerate() {
            let mut grad = 0.0;
            for (c, &node) in corners.iter().enumerate() {
                if (c >> a) & 1 == 1 {
                    grad += v[node] - v[corners[c ^ (1 << a)]];
                }
            }
            grad *= ih / edges as f64;
            s += grad * grad;
        }
        vol * s
    })
}

pub fn h1_norm(field: &ScalarField) -> f64 {
    let l2 = lp_norm(field, 2.0);
    (l2 * l2 + h1_seminorm_sq(field)).sqrt()
}

fn spatial(field: &ScalarField, which: SpatialNorm) -> f64 {
    match which {
        SpatialNorm::L2 => lp_norm(field, 2.0),
        SpatialNorm::L4 => lp_norm(field, 4.0),
        SpatialNorm::H1 => h1_norm(field),
    }
}

/// Time-integrated norm of frame-wise values with trapezoidal time weights.
fn time_norm(grid: &super::Grid, frame_norms: &[f64], p: TimeExponent) -> f64 {
    match p {
        TimeExponent::Inf => frame_norms.iter().fold(0.0, |m, &n| m.max(n)),
        TimeExponent::P(p) => {
            assert!(p >= 1.0 && p.is_finite(), "time exponent must be >= 1, got {p}");
            frame_norms
                .iter()
                .enumerate()
                .map(|(k, n)| grid.time_weight(k) * n.powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
    }
}

/// `‖u‖_{L^p(0,T; X)}`; the time integral uses the trapezoidal rule so that
/// constant-in-time series integrate exactly.
pub fn bochner_norm(series: &FieldSeries, p_time: TimeExponent, which: SpatialNorm) -> f64 {
    let norms: Vec<f64> = series.frames().iter().map(|f| spatial(f, which)).collect();
    time_norm(series.grid(), &norms, p_time)
}

/// Riesz-map surrogate of the `(W^{1,2})*` norm: solve `R u = Mass f` and
/// return `√(fᵀ Mass u)`.
pub fn dual_norm(field: &ScalarField, riesz: &SparseOperator) -> Result<f64> {
    let g = field.grid();
    let load: Vec<f64> = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| g.weight(i) * v)
        .collect();
    dual_norm_of_load(&load, riesz)
}

/// Same as [`dual_norm`] for an already assembled load vector.
pub fn dual_norm_of_load(load: &[f64], riesz: &SparseOperator) -> Result<f64> {
    let opts = CgOptions {
        tol: 1e-12,
        ..CgOptions::default()
    };
    let u = cg_solve(riesz, load, None, &opts)?.x;
    Ok(crate::exec::dot(load, &u).max(0.0).sqrt())
}

/// `L^p` in time of the frame-wise dual norms.
pub fn series_dual_norm(
    series: &FieldSeries,
    riesz: &SparseOperator,
    p_time: TimeExponent,
) -> Result<f64> {
    let norms = series
        .frames()
        .iter()
        .map(|f| dual_norm(f, riesz))
        .collect::<Result<Vec<_>>>()?;
    Ok(time_norm(series.grid(), &norms, p_time))
}

/// `Σ_k dt ‖(u^k − u^{k−1})/dt‖²_{L²}` with backward differences.
pub fn time_derivative_l2_sq(series: &FieldSeries) -> f64 {
    let dt = series.grid().dt();
    (1..series.n_frames())
        .map(|k| {
            let diff = series.frame(k).zip_map(series.frame(k - 1), |a, b| (a - b) / dt);
            let n = lp_norm(&diff, 2.0);
            dt * n * n
        })
        .sum()
}

/// `f − (∫f)/|Ω|`
pub fn zero_mean_project(field: &ScalarField) -> ScalarField {
    let mean = integrate(field) / field.grid().measure();
    field.map(|v| v - mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn integrate_linear_exactly() {
        let g = Grid::unit_interval(65, 1.0, 1).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        assert!((integrate(&f) - 0.5).abs() < 1e-12);
        let one = ScalarField::constant(Grid::unit_square(9, 1.0, 1).unwrap(), 1.0);
        assert!((integrate(&one) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn h1_of_linear_function() {
        let g = Grid::unit_interval(129, 1.0, 1).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        let exact = (1.0f64 / 3.0 + 1.0).sqrt();
        assert!((h1_norm(&f) - exact).abs() < 1e-4);
        let c = ScalarField::constant(g, 3.0);
        assert!((h1_norm(&c) - lp_norm(&c, 2.0)).abs() < 1e-14);
    }

    #[test]
    fn h1_seminorm_in_2d_matches_gradient_energy() {
        // u = x + 2y has |∇u|² = 5 everywhere.
        let g = Grid::new(&[9, 5], &[1.0, 2.0], 1.0, 1).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] + 2.0 * x[1]);
        assert!((h1_seminorm_sq(&f) - 5.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn bochner_constant_in_time() {
        let g = Grid::unit_interval(5, 2.0, 8).unwrap();
        let s = FieldSeries::separable(&ScalarField::constant(g, 3.0), |_| 1.0);
        let n = bochner_norm(&s, TimeExponent::P(2.0), SpatialNorm::L2);
        assert!((n - 3.0 * 2.0f64.sqrt()).abs() < 1e-13);
        let sup = bochner_norm(&s, TimeExponent::Inf, SpatialNorm::L2);
        assert!((sup - 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_mean_of_x() {
        let g = Grid::unit_interval(17, 1.0, 1).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        let p = zero_mean_project(&f);
        for (i, v) in p.values().iter().enumerate() {
            assert!((v - (g.node_coords(i)[0] - 0.5)).abs() < 1e-14);
        }
    }
}
