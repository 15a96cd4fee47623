//! Cost evaluation, reduced gradient of the extracellular control, and
//! projected gradient descent with Armijo backtracking.

use crate::adjoint::{running_cost, solve_adjoint, AdjointTrajectory, CostConfig};
use crate::error::{Error, Result};
use crate::forward::{simulate, ProblemConfig, SystemKind, Trajectory};
use crate::grid::{integrate, lp_norm, FieldSeries, ScalarField};

/// `J = Σ_k τ_k ∫ r_k + μ/2 Σ_k τ_k ∫ χ I_e²` with trapezoidal time weights
/// `τ_k` and lumped spatial quadrature.
pub fn evaluate_cost(traj: &Trajectory, control: &FieldSeries, cost: &CostConfig) -> f64 {
    let g = traj.phi_tr.grid();
    let mask = cost.mask.values();
    (0..g.n_frames())
        .map(|k| {
            let r = integrate(&running_cost(cost, &traj.state(k), k));
            let c = control.frame(k);
            let reg = integrate(&ScalarField::new(
                *g,
                c.values().iter().zip(mask).map(|(v, m)| m * v * v).collect(),
            )
            .expect("control layout"));
            g.time_weight(k) * (r + 0.5 * cost.mu * reg)
        })
        .sum()
}

/// Mask to the control region and, for the bidomain system, remove the
/// weighted mean over that region. Orthogonal projection in the lumped
/// inner product.
pub fn apply_q(field: &ScalarField, mask: &ScalarField, kind: SystemKind) -> Result<ScalarField> {
    let g = field.grid();
    let m = mask.values();
    let region: f64 = (0..m.len()).map(|i| g.weight(i) * m[i]).sum();
    if region <= 0.0 {
        return Err(Error::Config("control region is empty".into()));
    }
    let masked = field.zip_map(mask, |v, c| v * c);
    if kind == SystemKind::Monodomain {
        return Ok(masked);
    }
    let mean = integrate(&masked) / region;
    Ok(masked.zip_map(mask, |v, c| v - mean * c))
}

pub fn apply_q_series(series: &FieldSeries, mask: &ScalarField, kind: SystemKind) -> Result<FieldSeries> {
    let frames = series
        .frames()
        .iter()
        .map(|f| apply_q(f, mask, kind))
        .collect::<Result<Vec<_>>>()?;
    FieldSeries::new(*series.grid(), frames)
}

/// Gradient density of `J` with respect to `I_e` in the lumped space-time
/// inner product, projected onto the admissible directions.
///
/// Monodomain: `μχI_e + P1/((1+λ) c_k)`; bidomain: `μχI_e − P2`, where
/// `c_k dt` is the time weight of frame `k`.
pub fn reduced_gradient(
    adj: &AdjointTrajectory,
    control: &FieldSeries,
    config: &ProblemConfig,
    cost: &CostConfig,
) -> Result<FieldSeries> {
    let g = *config.grid();
    let kind = config.kind();
    let lam = config.ops().lambda();
    let frames = (0..g.n_frames())
        .map(|k| {
            let reg = control.frame(k).zip_map(&cost.mask, |v, m| cost.mu * m * v);
            let raw = match kind {
                SystemKind::Monodomain => {
                    let c_k = g.time_weight(k) / g.dt();
                    let s = 1.0 / ((1.0 + lam) * c_k);
                    reg.zip_map(adj.p1.frame(k), |a, p| a + s * p)
                }
                SystemKind::Bidomain => reg.zip_map(adj.p2.frame(k), |a, p| a - p),
            };
            apply_q(&raw, &cost.mask, kind)
        })
        .collect::<Result<Vec<_>>>()?;
    FieldSeries::new(g, frames)
}

/// Optimal control problem over `I_e` with `I_i` held as data.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub config: ProblemConfig,
    pub cost: CostConfig,
    /// Iteration budget.
    pub max_iter: usize,
    /// Radius of the frame-wise `L²` ball of admissible controls.
    pub radius: f64,
    pub armijo_c: f64,
    pub max_halvings: usize,
    pub initial_step: f64,
    /// Stop when `‖g‖ ≤ gtol·(1 + ‖g_0‖)`.
    pub gtol: f64,
    /// Stop when the relative decrease of `J` falls below this.
    pub ftol: f64,
}

impl ControlProblem {
    pub fn new(config: ProblemConfig, cost: CostConfig) -> Result<Self> {
        if cost.phi_des.grid() != config.grid() {
            return Err(Error::validation("control problem", "target and configuration grids differ"));
        }
        Ok(ControlProblem {
            config,
            cost,
            max_iter: 50,
            radius: 1e3,
            armijo_c: 1e-4,
            max_halvings: 40,
            initial_step: 1.0,
            gtol: 1e-6,
            ftol: 1e-10,
        })
    }

    pub fn kind(&self) -> SystemKind {
        self.config.kind()
    }

    /// Admissible shift of frame `k`: the constant on the control region
    /// that cancels `∫I_i` for the bidomain system, zero otherwise.
    pub fn offset(&self, k: usize) -> Result<ScalarField> {
        let mask = &self.cost.mask;
        if self.kind() == SystemKind::Monodomain {
            return Ok(ScalarField::zeros(*mask.grid()));
        }
        let region = integrate(mask);
        if region <= 0.0 {
            return Err(Error::Config("control region is empty".into()));
        }
        let c = -integrate(self.config.i_i().frame(k)) / region;
        Ok(mask.scaled(c))
    }

    /// `Π_𝒞`: offset plus `Q` of the control, with the `Q` part shrunk so
    /// that every frame lies in the ball of radius `R`. The two parts are
    /// orthogonal, so the shrink is exact.
    pub fn project(&self, control: &FieldSeries) -> Result<FieldSeries> {
        let q = apply_q_series(control, &self.cost.mask, self.kind())?;
        let frames = (0..q.n_frames())
            .map(|k| {
                let off = self.offset(k)?;
                let r_off = lp_norm(&off, 2.0);
                if r_off > self.radius {
                    return Err(Error::Config(format!(
                        "control radius {} is below the compatibility offset {r_off:e} at frame {k}",
                        self.radius
                    )));
                }
                let f = q.frame(k);
                let n = lp_norm(f, 2.0);
                let room = (self.radius * self.radius - r_off * r_off).sqrt();
                let mut out = if n > room { f.scaled(room / n) } else { f.clone() };
                out.axpy(1.0, &off);
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        FieldSeries::new(*control.grid(), frames)
    }

    /// Forward solve and cost for a control.
    pub fn cost_of(&self, control: &FieldSeries) -> Result<(f64, Trajectory)> {
        let cfg = self.config.with_extracellular(control.clone())?;
        let traj = simulate(&cfg)?;
        Ok((evaluate_cost(&traj, control, &self.cost), traj))
    }

    /// Cost and reduced gradient.
    pub fn cost_and_gradient(&self, control: &FieldSeries) -> Result<(f64, FieldSeries)> {
        let cfg = self.config.with_extracellular(control.clone())?;
        let traj = simulate(&cfg)?;
        let j = evaluate_cost(&traj, control, &self.cost);
        let adj = solve_adjoint(&traj, &cfg, &self.cost)?;
        Ok((j, reduced_gradient(&adj, control, &cfg, &self.cost)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    /// Accepted step; 0 on the final record.
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    CostStalled,
    Budget,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub control: FieldSeries,
    pub history: Vec<HistoryEntry>,
    pub reason: StopReason,
}

/// `iter,J,grad_norm,step_size`
pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut s = String::from("iter,J,grad_norm,step_size\n");
    for h in history {
        s.push_str(&format!("{},{:e},{:e},{:e}\n", h.iter, h.cost, h.grad_norm, h.step_size));
    }
    s
}

/// Projected gradient descent starting from the projection of the
/// configuration's `I_e`.
pub fn projected_gradient_descent(problem: &ControlProblem) -> Result<OptimizationResult> {
    let mut control = problem.project(problem.config.i_e())?;
    let mut history = Vec::new();
    let (mut j, mut grad) = problem.cost_and_gradient(&control)?;
    let mut g_norm = grad.inner(&grad).sqrt();
    let g0 = g_norm;
    let mut iter = 0;
    let reason = loop {
        if g_norm <= problem.gtol * (1.0 + g0) {
            break StopReason::Gradient;
        }
        if iter >= problem.max_iter {
            break StopReason::Budget;
        }
        let mut alpha = problem.initial_step;
        let mut accepted = None;
        for _ in 0..=problem.max_halvings {
            let trial = problem.project(&control.add_scaled(-alpha, &grad))?;
            let decrease = grad.inner(&trial.sub(&control));
            // A trial that blows up is rejected like any other increase.
            let j_trial = match problem.cost_of(&trial) {
                Ok((j, _)) => j,
                Err(Error::Divergence { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if j_trial <= j + problem.armijo_c * decrease && j_trial.is_finite() {
                accepted = Some((trial, j_trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, j_trial)) = accepted else {
            return Err(Error::Stagnation {
                halvings: problem.max_halvings,
                cost: j,
                grad_norm: g_norm,
            });
        };
        history.push(HistoryEntry {
            iter,
            cost: j,
            grad_norm: g_norm,
            step_size: alpha,
        });
        iter += 1;
        let rel = (j - j_trial) / j.abs().max(f64::MIN_POSITIVE);
        control = trial;
        let (j_new, grad_new) = problem.cost_and_gradient(&control)?;
        j = j_new;
        grad = grad_new;
        g_norm = grad.inner(&grad).sqrt();
        if rel < problem.ftol {
            break StopReason::CostStalled;
        }
    };
    history.push(HistoryEntry {
        iter,
        cost: j,
        grad_norm: g_norm,
        step_size: 0.0,
    });
    Ok(OptimizationResult {
        control,
        history,
        reason,
    })
}
