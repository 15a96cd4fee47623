use crate::adjoint::{cost_partials, AdjointTrajectory, CostConfig};
use crate::error::Result;
use crate::forward::{time_derivative_dual, ProblemConfig, SystemKind, Trajectory};
use crate::grid::{
    bochner_norm, lp_norm, series_dual_norm, FieldSeries, ScalarField, SpatialNorm, TimeExponent,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriResult {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, 0 when both vanish.
    pub ratio: f64,
}

fn result(lhs: f64, rhs: f64) -> AprioriResult {
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    AprioriResult { lhs, rhs, ratio }
}

/// Forward estimate: left side
/// `‖Φ‖²_{C⁰L²} + ‖Φ‖²_{L²H¹} + ‖Φ‖⁴_{L⁴(Ω_T)} + ‖∂_tΦ‖^{4/3}_{L^{4/3}(H¹*)}
///  (+ ‖Φ_e‖²_{L²H¹}) + ‖W‖²_{C⁰L²} + ‖∂_tW‖²_{L²(H¹*)}`,
/// right side `1 + ‖Φ_0‖² + ‖W_0‖² + ‖I_i‖²_{L²(H¹*)} + ‖I_e‖²_{L²(H¹*)}`.
pub fn apriori_check(traj: &Trajectory, config: &ProblemConfig) -> Result<AprioriResult> {
    let ops = config.ops();
    let phi = &traj.phi_tr;
    let sq = |x: f64| x * x;
    let mut lhs = sq(bochner_norm(phi, TimeExponent::Inf, SpatialNorm::L2))
        + sq(bochner_norm(phi, TimeExponent::P(2.0), SpatialNorm::H1))
        + bochner_norm(phi, TimeExponent::P(4.0), SpatialNorm::L4).powi(4)
        + time_derivative_dual(phi, ops, 4.0 / 3.0)?.powf(4.0 / 3.0)
        + sq(bochner_norm(&traj.w, TimeExponent::Inf, SpatialNorm::L2))
        + sq(time_derivative_dual(&traj.w, ops, 2.0)?);
    if config.kind() == SystemKind::Bidomain {
        lhs += sq(bochner_norm(&traj.phi_e, TimeExponent::P(2.0), SpatialNorm::H1));
    }
    let rhs = 1.0
        + sq(lp_norm(config.phi0(), 2.0))
        + sq(lp_norm(config.w0(), 2.0))
        + sq(series_dual_norm(config.i_i(), ops.riesz(), TimeExponent::P(2.0))?)
        + sq(series_dual_norm(config.i_e(), ops.riesz(), TimeExponent::P(2.0))?);
    Ok(result(lhs, rhs))
}

/// Adjoint estimate: left side
/// `‖P1‖²_{L∞L²} + ‖P1‖²_{L²H¹} + ‖P2‖²_{L²H¹} + ‖P3‖²_{L∞L²}`, right side
/// the squared `L²(Ω_T)` norms of the three cost partials along `traj`.
pub fn adjoint_apriori_check(
    adj: &AdjointTrajectory,
    traj: &Trajectory,
    config: &ProblemConfig,
    cost: &CostConfig,
) -> Result<AprioriResult> {
    let sq = |x: f64| x * x;
    let mut lhs = sq(bochner_norm(&adj.p1, TimeExponent::Inf, SpatialNorm::L2))
        + sq(bochner_norm(&adj.p1, TimeExponent::P(2.0), SpatialNorm::H1))
        + sq(bochner_norm(&adj.p3, TimeExponent::Inf, SpatialNorm::L2));
    if config.kind() == SystemKind::Bidomain {
        lhs += sq(bochner_norm(&adj.p2, TimeExponent::P(2.0), SpatialNorm::H1));
    }
    let g = *config.grid();
    let mut parts: [Vec<ScalarField>; 3] = Default::default();
    for k in 0..g.n_frames() {
        let (a, b, c) = cost_partials(cost, &traj.state(k), k);
        parts[0].push(a);
        parts[1].push(b);
        parts[2].push(c);
    }
    let mut rhs = 0.0;
    for frames in parts {
        let s = FieldSeries::new(g, frames)?;
        rhs += sq(bochner_norm(&s, TimeExponent::P(2.0), SpatialNorm::L2));
    }
    Ok(result(lhs, rhs))
}
