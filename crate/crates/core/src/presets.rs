//! Small reference problems shared by the tests, the benchmarks and the CLI
//! defaults.

use std::sync::Arc;

use crate::assembly::SystemOperators;
use crate::error::Result;
use crate::forward::{ProblemConfig, SystemKind};
use crate::grid::{FieldSeries, Grid, ScalarField, TensorField};
use crate::ionic::{IonicModel, IonicParams};

/// `exp(−|x − c|² / (2 w²))` over the active axes.
pub fn gaussian_bump(grid: &Grid, center: &[f64], width: f64) -> ScalarField {
    let d = grid.dim();
    let c: Vec<f64> = (0..d).map(|a| center.get(a).copied().unwrap_or(0.5)).collect();
    ScalarField::from_fn(*grid, |x| {
        let r2: f64 = (0..d).map(|a| (x[a] - c[a]).powi(2)).sum();
        (-r2 / (2.0 * width * width)).exp()
    })
}

/// `sin²` pulse supported on `[t0, t1]`; zero outside.
pub fn time_window(t: f64, t0: f64, t1: f64) -> f64 {
    if t <= t0 || t >= t1 {
        0.0
    } else {
        (std::f64::consts::PI * (t - t0) / (t1 - t0)).sin().powi(2)
    }
}

/// Separable stimulus `amplitude · bump(x) · window(t)`.
pub fn pulse(grid: &Grid, amplitude: f64, center: &[f64], width: f64, t0: f64, t1: f64) -> FieldSeries {
    let profile = gaussian_bump(grid, center, width).scaled(amplitude);
    FieldSeries::separable(&profile, |t| time_window(t, t0, t1))
}

/// Removes the weighted spatial mean of every frame.
pub fn zero_mean_series(s: &FieldSeries) -> FieldSeries {
    s.map_frames(crate::grid::zero_mean_project)
}

/// Conductivities and stimulus of the reference problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeskSetup {
    pub sigma_i: f64,
    pub lambda: f64,
    pub amplitude: f64,
    pub width: f64,
    pub center: [f64; 3],
    pub window: (f64, f64),
}

impl Default for DeskSetup {
    fn default() -> Self {
        DeskSetup {
            sigma_i: 0.1,
            lambda: 1.0,
            amplitude: 4.0,
            width: 0.1,
            center: [0.3, 0.4, 0.5],
            window: (0.0, 0.5),
        }
    }
}

/// Reference problem on `grid`: isotropic `M_i = σ_i I`, `M_e = λ M_i`,
/// rest initial state, `I_i = 0` and a smooth zero-mean extracellular pulse.
pub fn desk_problem(kind: SystemKind, model: IonicModel, grid: Grid, setup: &DeskSetup) -> Result<ProblemConfig> {
    let m_i = TensorField::isotropic(grid, setup.sigma_i)?;
    let ops = Arc::new(SystemOperators::proportional(m_i, setup.lambda)?);
    let i_e = zero_mean_series(&pulse(
        &grid,
        -setup.amplitude,
        &setup.center,
        setup.width,
        setup.window.0,
        setup.window.1,
    ));
    ProblemConfig::new(
        kind,
        ops,
        IonicParams::new(model),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        FieldSeries::zeros(grid),
        i_e,
    )
}

/// Same as [`desk_problem`] with all data zero.
pub fn rest_problem(kind: SystemKind, model: IonicModel, grid: Grid) -> Result<ProblemConfig> {
    let m_i = TensorField::isotropic(grid, 0.1)?;
    let ops = Arc::new(SystemOperators::proportional(m_i, 1.0)?);
    ProblemConfig::new(
        kind,
        ops,
        IonicParams::new(model),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        FieldSeries::zeros(grid),
        FieldSeries::zeros(grid),
    )
}
