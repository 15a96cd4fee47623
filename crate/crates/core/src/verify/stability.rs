use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{compatibility_enforce, simulate, ProblemConfig, SystemKind, Trajectory};
use crate::grid::{
    bochner_norm, series_dual_norm, time_derivative_l2_sq, FieldSeries, SpatialNorm, TimeExponent,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub points: Vec<StabilityPoint>,
    /// Largest observed ratio.
    pub fitted_c: f64,
    /// Largest ratio over the median ratio.
    pub spread: f64,
}

impl StabilityReport {
    /// `scale,lhs,rhs,ratio`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scale,lhs,rhs,ratio\n");
        for p in &self.points {
            s.push_str(&format!("{:e},{:e},{:e},{:e}\n", p.scale, p.lhs, p.rhs, p.ratio));
        }
        s
    }
}

/// Squared norm bundle of the difference of two solutions:
/// `‖ΔΦ‖²_{C⁰L²} + ‖ΔΦ‖²_{L²H¹} (+ ‖ΔΦ_e‖²_{L²H¹}) + ‖ΔW‖²_{C⁰L²} + ‖ΔW‖²_{W^{1,2}(L²)}`.
pub fn difference_bundle(a: &Trajectory, b: &Trajectory, kind: SystemKind) -> f64 {
    let dphi = a.phi_tr.sub(&b.phi_tr);
    let dw = a.w.sub(&b.w);
    let sq = |x: f64| x * x;
    let mut lhs = sq(bochner_norm(&dphi, TimeExponent::Inf, SpatialNorm::L2))
        + sq(bochner_norm(&dphi, TimeExponent::P(2.0), SpatialNorm::H1))
        + sq(bochner_norm(&dw, TimeExponent::Inf, SpatialNorm::L2))
        + sq(bochner_norm(&dw, TimeExponent::P(2.0), SpatialNorm::L2))
        + time_derivative_l2_sq(&dw);
    if kind == SystemKind::Bidomain {
        let de = a.phi_e.sub(&b.phi_e);
        lhs += sq(bochner_norm(&de, TimeExponent::P(2.0), SpatialNorm::H1));
    }
    lhs
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Perturbs the controls of `base` by `s·(δ_i, δ_e)` for every scale and
/// compares the solution differences with the dual norms of the control
/// differences. Bidomain perturbations are made compatible first.
pub fn stability_experiment(
    base: &ProblemConfig,
    delta_i: &FieldSeries,
    delta_e: &FieldSeries,
    scales: &[f64],
) -> Result<StabilityReport> {
    if scales.is_empty() {
        return Err(Error::Degenerate("no perturbation scales".into()));
    }
    if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s != 0.0)) {
        return Err(Error::Degenerate(format!("perturbation scale {s} is excluded")));
    }
    let (d_i, d_e) = match base.kind() {
        SystemKind::Bidomain => compatibility_enforce(delta_i, delta_e),
        SystemKind::Monodomain => (delta_i.clone(), delta_e.clone()),
    };
    if d_i.max_abs() == 0.0 && d_e.max_abs() == 0.0 {
        return Err(Error::Degenerate("zero perturbation direction".into()));
    }
    let ops = base.ops();
    let unit_rhs = series_dual_norm(&d_i, ops.riesz(), TimeExponent::P(2.0))?.powi(2)
        + series_dual_norm(&d_e, ops.riesz(), TimeExponent::P(2.0))?.powi(2);
    let reference = simulate(base)?;
    let runs = Exec::default().map(scales, |&s| -> Result<StabilityPoint> {
        let cfg = base.with_controls(
            base.i_i().add_scaled(s, &d_i),
            base.i_e().add_scaled(s, &d_e),
        )?;
        let traj = simulate(&cfg)?;
        let lhs = difference_bundle(&traj, &reference, base.kind());
        let rhs = s * s * unit_rhs;
        Ok(StabilityPoint {
            scale: s,
            lhs,
            rhs,
            ratio: lhs / rhs,
        })
    });
    let points = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    let fitted_c = ratios.iter().copied().fold(0.0, f64::max);
    let med = median(&ratios);
    let spread = if med > 0.0 { fitted_c / med } else { f64::INFINITY };
    Ok(StabilityReport {
        points,
        fitted_c,
        spread,
    })
}
