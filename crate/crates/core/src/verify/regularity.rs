use crate::forward::Trajectory;
use crate::grid::{bochner_norm, FieldSeries, SpatialNorm, TimeExponent};

/// Largest accepted ratio of the refined to the coarse monitor value.
pub const REGULARITY_GROWTH: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// `‖I‖_{L⁴(0,T;L²)}` of the coarse controls.
    pub control_l4_l2: f64,
    pub coarse: f64,
    pub refined: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// `‖Φ_tr‖_{L⁴(0,T;H¹)}`
pub fn l4_h1(traj: &Trajectory) -> f64 {
    bochner_norm(&traj.phi_tr, TimeExponent::P(4.0), SpatialNorm::H1)
}

/// Monitors `L⁴(0,T;H¹)` of the potential on a coarse and a refined run of
/// the same problem; passes when both are finite and the refined value does
/// not exceed the coarse one by more than [`REGULARITY_GROWTH`].
pub fn regularity_monitor(coarse: &Trajectory, refined: &Trajectory, controls: &[&FieldSeries]) -> RegularityReport {
    let control_l4_l2 = controls
        .iter()
        .map(|c| bochner_norm(c, TimeExponent::P(4.0), SpatialNorm::L2))
        .sum();
    let a = l4_h1(coarse);
    let b = l4_h1(refined);
    let ratio = if a > 0.0 { b / a } else if b == 0.0 { 1.0 } else { f64::INFINITY };
    let pass = a.is_finite() && b.is_finite() && f64::is_finite(control_l4_l2) && ratio <= REGULARITY_GROWTH;
    RegularityReport {
        control_l4_l2,
        coarse: a,
        refined: b,
        ratio,
        pass,
    }
}
