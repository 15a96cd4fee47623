use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{apply_q_series, ControlProblem};
use crate::error::Result;
use crate::exec::Exec;
use crate::grid::{FieldSeries, Grid};

/// Finite-difference steps tried for every direction.
pub const GRADCHECK_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCheck {
    /// `⟨g, d⟩`
    pub adjoint: f64,
    /// Central difference at the chosen step.
    pub finite_difference: f64,
    pub step: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub directions: Vec<DirectionCheck>,
    pub max_relative_error: f64,
}

/// Smooth random field: a few low cosine modes per axis times a random
/// combination of low sine modes in time, scaled to unit sup-norm.
pub fn smooth_direction(grid: &Grid, rng: &mut impl Rng) -> FieldSeries {
    let d = grid.dim();
    let modes = 3usize;
    let n_terms = modes.pow(d as u32);
    let space: Vec<f64> = (0..n_terms).map(|_| rng.random_range(-1.0..1.0)).collect();
    let time: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lengths = grid.lengths().to_vec();
    let t_final = grid.t_final();
    let s = FieldSeries::from_fn(*grid, |x, t| {
        let mut sx = 0.0;
        for (m, c) in space.iter().enumerate() {
            let mut v = *c;
            let mut rest = m;
            for (a, len) in lengths.iter().enumerate() {
                let q = rest % modes;
                rest /= modes;
                v *= (std::f64::consts::PI * q as f64 * x[a] / len).cos();
            }
            sx += v;
        }
        let st: f64 = time
            .iter()
            .enumerate()
            .map(|(l, c)| c * (std::f64::consts::PI * (l + 1) as f64 * t / t_final).sin())
            .sum::<f64>()
            + 0.5;
        sx * st
    });
    let m = s.max_abs();
    if m > 0.0 {
        s.scaled(1.0 / m)
    } else {
        s
    }
}

/// Compares `⟨g, d⟩` with central differences of `J` along `n_directions`
/// smooth admissible directions. For each direction the step is picked from
/// [`GRADCHECK_STEPS`]: the adjacent pair whose estimates agree best, then
/// the smaller step of that pair. A vanishing gradient with a difference
/// quotient at truncation level counts as exact agreement.
pub fn gradient_check(
    problem: &ControlProblem,
    control: &FieldSeries,
    n_directions: usize,
    seed: u64,
) -> Result<GradientCheck> {
    let control = problem.project(control)?;
    let (j0, grad) = problem.cost_and_gradient(&control)?;
    let grad_norm = grad.inner(&grad).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = (0..n_directions)
        .map(|_| apply_q_series(&smooth_direction(problem.config.grid(), &mut rng), &problem.cost.mask, problem.kind()))
        .collect::<Result<Vec<_>>>()?;

    let checks = Exec::default().map(&dirs, |d| -> Result<DirectionCheck> {
        let adjoint = grad.inner(d);
        let mut fd = Vec::with_capacity(GRADCHECK_STEPS.len());
        for &h in &GRADCHECK_STEPS {
            let (jp, _) = problem.cost_of(&control.add_scaled(h, d))?;
            let (jm, _) = problem.cost_of(&control.add_scaled(-h, d))?;
            fd.push((jp - jm) / (2.0 * h));
        }
        let best = (0..fd.len() - 1)
            .min_by(|&a, &b| {
                let da = (fd[a] - fd[a + 1]).abs();
                let db = (fd[b] - fd[b + 1]).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        let (step, finite_difference) = (GRADCHECK_STEPS[best + 1], fd[best + 1]);
        // Directions nearly orthogonal to g are measured against the
        // Cauchy-Schwarz bound instead of the tiny directional derivative.
        let scale = adjoint.abs().max(1e-6 * grad_norm * d.inner(d).sqrt());
        let relative_error = if scale > 0.0 {
            (finite_difference - adjoint).abs() / scale
        } else if finite_difference.abs() <= 1e-8 * (1.0 + j0.abs()) {
            0.0
        } else {
            f64::INFINITY
        };
        Ok(DirectionCheck {
            adjoint,
            finite_difference,
            step,
            relative_error,
        })
    });
    let directions = checks.into_iter().collect::<Result<Vec<_>>>()?;
    let max_relative_error = directions
        .iter()
        .map(|d| d.relative_error)
        .fold(0.0, f64::max);
    Ok(GradientCheck {
        directions,
        max_relative_error,
    })
}
