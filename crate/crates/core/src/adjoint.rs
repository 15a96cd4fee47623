//! Backward integration of the adjoint systems.
//!
//! The backward step is the transpose of the forward step: implicit
//! diffusion with the same operator, reaction coefficients frozen at the
//! stored forward states, and the exponential factor of the gating update.
//! Frame `k` of `P1`/`P3` is the (sign-flipped) multiplier of the forward
//! step `k → k+1`, so the terminal frames vanish.

use serde::{Deserialize, Serialize};

use crate::assembly::{cg_solve, ReducedBidomainOperator, SparseOperator};
use crate::error::{Error, Result};
use crate::forward::{ProblemConfig, SystemKind, SystemState, Trajectory};
use crate::grid::{
    bochner_norm, zero_mean_project, FieldSeries, NormReport, ScalarField, SpatialNorm,
    TimeExponent,
};
use crate::ionic::{d_i_ion, gate_source_derivative};

/// Tracking cost `r = ½w_φ(φ−φ_d)² + ½w_η(η−η_d)² + ½w_g w²` plus the
/// control penalty `μ/2 ‖χ I_e‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig {
    pub phi_des: FieldSeries,
    /// Extracellular target; zero when absent.
    pub eta_des: Option<FieldSeries>,
    pub w_phi: f64,
    pub w_eta: f64,
    pub w_gate: f64,
    pub mu: f64,
    /// Indicator of the control region, values in {0, 1}.
    pub mask: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_phi: f64,
    pub w_eta: f64,
    pub w_gate: f64,
    pub mu: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            w_phi: 1.0,
            w_eta: 0.0,
            w_gate: 0.0,
            mu: 1e-2,
        }
    }
}

impl CostConfig {
    pub fn new(
        phi_des: FieldSeries,
        eta_des: Option<FieldSeries>,
        weights: CostWeights,
        mask: ScalarField,
    ) -> Result<Self> {
        let CostWeights {
            w_phi,
            w_eta,
            w_gate,
            mu,
        } = weights;
        for (name, v) in [("w_phi", w_phi), ("w_eta", w_eta), ("w_gate", w_gate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation("cost", format!("{name} = {v} must be >= 0")));
            }
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::validation("cost", format!("mu = {mu} must be > 0")));
        }
        if mask.values().iter().any(|&m| m != 0.0 && m != 1.0) {
            return Err(Error::validation("cost", "control mask must take values 0 or 1"));
        }
        if !mask.grid().same_space(phi_des.grid()) {
            return Err(Error::validation("cost", "mask and target use different grids"));
        }
        if let Some(e) = &eta_des {
            if e.grid() != phi_des.grid() {
                return Err(Error::validation("cost", "targets use different grids"));
            }
        }
        Ok(CostConfig {
            phi_des,
            eta_des,
            w_phi,
            w_eta,
            w_gate,
            mu,
            mask,
        })
    }

    /// Tracking of `φ_des` only, control on the whole domain.
    pub fn tracking(phi_des: FieldSeries, mu: f64) -> Result<Self> {
        let mask = ScalarField::constant(*phi_des.grid(), 1.0);
        Self::new(
            phi_des,
            None,
            CostWeights {
                mu,
                ..CostWeights::default()
            },
            mask,
        )
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights {
            w_phi: self.w_phi,
            w_eta: self.w_eta,
            w_gate: self.w_gate,
            mu: self.mu,
        }
    }

    /// Cost with all tracking weights multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Self {
        let mut c = self.clone();
        c.w_phi *= factor;
        c.w_eta *= factor;
        c.w_gate *= factor;
        c
    }

    fn eta_target(&self, k: usize, i: usize) -> f64 {
        self.eta_des.as_ref().map_or(0.0, |e| e.frame(k).values()[i])
    }
}

/// Pointwise running cost `r` at frame `k`.
pub fn running_cost(cost: &CostConfig, state: &SystemState, k: usize) -> ScalarField {
    let phi = state.phi_tr.values();
    let eta = state.phi_e.values();
    let w = state.w.values();
    let des = cost.phi_des.frame(k).values();
    let values = (0..phi.len())
        .map(|i| {
            let dp = phi[i] - des[i];
            let de = eta[i] - cost.eta_target(k, i);
            0.5 * (cost.w_phi * dp * dp + cost.w_eta * de * de + cost.w_gate * w[i] * w[i])
        })
        .collect();
    ScalarField::new(*state.phi_tr.grid(), values).expect("state layout")
}

/// `(∂r/∂φ, ∂r/∂η, ∂r/∂w)` at frame `k`.
pub fn cost_partials(
    cost: &CostConfig,
    state: &SystemState,
    k: usize,
) -> (ScalarField, ScalarField, ScalarField) {
    let des = cost.phi_des.frame(k);
    let r_phi = state.phi_tr.zip_map(des, |p, d| cost.w_phi * (p - d));
    let eta = state.phi_e.values();
    let grid = *state.phi_tr.grid();
    let r_eta = ScalarField::new(
        grid,
        (0..eta.len())
            .map(|i| cost.w_eta * (eta[i] - cost.eta_target(k, i)))
            .collect(),
    )
    .expect("state layout");
    let r_w = state.w.scaled(cost.w_gate);
    (r_phi, r_eta, r_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState {
    /// Time of the frame.
    pub s: f64,
    pub p1: ScalarField,
    /// Elliptic adjoint (bidomain); zero for the monodomain system.
    pub p2: ScalarField,
    pub p3: ScalarField,
}

impl AdjointState {
    fn is_finite(&self) -> bool {
        self.p1.is_finite() && self.p2.is_finite() && self.p3.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub p1: FieldSeries,
    pub p2: FieldSeries,
    pub p3: FieldSeries,
}

enum Implicit<'a> {
    Matrix(SparseOperator),
    Reduced(ReducedBidomainOperator<'a>),
}

/// Backward steps for one forward trajectory and cost.
pub struct AdjointStepper<'a> {
    config: &'a ProblemConfig,
    traj: &'a Trajectory,
    cost: &'a CostConfig,
    implicit: Implicit<'a>,
}

impl<'a> AdjointStepper<'a> {
    pub fn new(config: &'a ProblemConfig, traj: &'a Trajectory, cost: &'a CostConfig) -> Result<Self> {
        let g = config.grid();
        if traj.phi_tr.grid() != g || cost.phi_des.grid() != g {
            return Err(Error::validation(
                "adjoint",
                "trajectory, target and configuration disagree on the grid",
            ));
        }
        let dt = g.dt();
        let implicit = match config.kind() {
            SystemKind::Monodomain => Implicit::Matrix(config.ops().monodomain_matrix(dt)),
            SystemKind::Bidomain => Implicit::Reduced(ReducedBidomainOperator::new(
                config.ops(),
                dt,
                config.solver().inner(),
            )),
        };
        Ok(AdjointStepper {
            config,
            traj,
            cost,
            implicit,
        })
    }

    fn bidomain(&self) -> bool {
        self.config.kind() == SystemKind::Bidomain
    }

    /// Zero-mean solve of `K_ie u = Mass·P0(f)`, `P0` the mean removal.
    fn solve_mass_load(&self, f: &ScalarField) -> Result<Vec<f64>> {
        let ops = self.config.ops();
        let load = ops.load(zero_mean_project(f).values());
        ops.solve_extracellular(&load, &self.config.solver().inner(), None)
    }

    /// `P2^k` from `K_ie P2 = −K_i P1 / c_k − Mass·P0(∂r/∂η)`, where
    /// `c_k dt` is the time weight of frame `k`.
    fn elliptic_adjoint(&self, p1: &ScalarField, r_eta: &ScalarField, k: usize) -> Result<ScalarField> {
        let g = self.config.grid();
        if !self.bidomain() {
            return Ok(ScalarField::zeros(*g));
        }
        let ops = self.config.ops();
        let c_k = g.time_weight(k) / g.dt();
        let kp = ops.k_i().mul(p1.values());
        let eta_load = ops.load(zero_mean_project(r_eta).values());
        let load: Vec<f64> = kp
            .iter()
            .zip(&eta_load)
            .map(|(a, b)| -a / c_k - b)
            .collect();
        ScalarField::new(*g, ops.solve_extracellular(&load, &self.config.solver().inner(), None)?)
    }

    /// Terminal frame: `P1 = P3 = 0`.
    pub fn terminal_state(&self) -> Result<AdjointState> {
        let g = self.config.grid();
        let n = g.n_steps();
        let state = self.traj.state(n);
        let (_, r_eta, _) = cost_partials(self.cost, &state, n);
        let zero = ScalarField::zeros(*g);
        let p2 = self.elliptic_adjoint(&zero, &r_eta, n)?;
        Ok(AdjointState {
            s: g.t_final(),
            p1: zero.clone(),
            p2,
            p3: zero,
        })
    }

    /// Frame `k` from frame `k + 1`.
    pub fn step(&self, next: &AdjointState, k: usize) -> Result<AdjointState> {
        let c = self.config;
        let g = c.grid();
        let ops = c.ops();
        let ionic = c.ionic();
        let dt = g.dt();
        let j = k + 1;
        let n = g.n_steps();
        let tau = g.time_weight(j);
        let decay = (-ionic.eps * dt).exp();

        let state_j = self.traj.state(j);
        let (r_phi, r_eta_j, r_w) = cost_partials(self.cost, &state_j, j);
        let phi_k = self.traj.phi_tr.frame(k).values();
        let phi_j = state_j.phi_tr.values();
        let w_j = state_j.w.values();
        let phi_after = (j < n).then(|| self.traj.phi_tr.frame(j + 1).values());
        let p1n = next.p1.values();
        let p3n = next.p3.values();
        let mass = ops.mass();

        let len = phi_j.len();
        let mut p3 = vec![0.0; len];
        let mut rhs = vec![0.0; len];
        for i in 0..len {
            let (ion_phi, ion_w) = if c.reaction() {
                d_i_ion(ionic, phi_j[i], w_j[i])
            } else {
                (0.0, 0.0)
            };
            p3[i] = decay * p3n[i] - dt * ion_w * p1n[i] - tau * r_w.values()[i];
            let mut gate = gate_source_derivative(ionic, 0.5 * (phi_k[i] + phi_j[i])) * p3[i];
            if let Some(after) = phi_after {
                gate += gate_source_derivative(ionic, 0.5 * (phi_j[i] + after[i])) * p3n[i];
            }
            rhs[i] = mass[i]
                * (-tau * r_phi.values()[i]
                    + (1.0 - dt * ion_phi) * p1n[i]
                    + 0.5 * (1.0 - decay) * gate);
        }
        if self.bidomain() {
            let zeta = self.solve_mass_load(&r_eta_j)?;
            let kz = ops.k_i().mul(&zeta);
            for i in 0..len {
                rhs[i] += tau * kz[i];
            }
        }
        let solution = match &self.implicit {
            Implicit::Matrix(a) => cg_solve(a, &rhs, Some(p1n), &c.solver().outer())?,
            Implicit::Reduced(a) => cg_solve(a, &rhs, Some(p1n), &c.solver().outer())?,
        };
        let p1 = ScalarField::new(*g, solution.x)?;
        let (_, r_eta_k, _) = cost_partials(self.cost, &self.traj.state(k), k);
        let p2 = self.elliptic_adjoint(&p1, &r_eta_k, k)?;
        let out = AdjointState {
            s: g.time(k),
            p1,
            p2,
            p3: ScalarField::new(*g, p3)?,
        };
        if !out.is_finite() {
            return Err(Error::Divergence {
                step: k,
                phase: "adjoint",
            });
        }
        Ok(out)
    }
}

fn check_kind(config: &ProblemConfig, kind: SystemKind) -> Result<()> {
    if config.kind() != kind {
        return Err(Error::Config(format!(
            "configuration describes the {:?} system",
            config.kind()
        )));
    }
    Ok(())
}

/// One backward monodomain step producing frame `k` from frame `k + 1`.
pub fn step_adjoint_monodomain(
    next: &AdjointState,
    traj: &Trajectory,
    config: &ProblemConfig,
    cost: &CostConfig,
    k: usize,
) -> Result<AdjointState> {
    check_kind(config, SystemKind::Monodomain)?;
    AdjointStepper::new(config, traj, cost)?.step(next, k)
}

/// One backward bidomain step producing frame `k` from frame `k + 1`.
pub fn step_adjoint_bidomain(
    next: &AdjointState,
    traj: &Trajectory,
    config: &ProblemConfig,
    cost: &CostConfig,
    k: usize,
) -> Result<AdjointState> {
    check_kind(config, SystemKind::Bidomain)?;
    AdjointStepper::new(config, traj, cost)?.step(next, k)
}

/// Backward sweep from the terminal frame.
pub fn solve_adjoint(traj: &Trajectory, config: &ProblemConfig, cost: &CostConfig) -> Result<AdjointTrajectory> {
    let stepper = AdjointStepper::new(config, traj, cost)?;
    let g = *config.grid();
    let n = g.n_steps();
    let mut frames = Vec::with_capacity(n + 1);
    let mut state = stepper.terminal_state()?;
    frames.push(state.clone());
    for k in (0..n).rev() {
        state = stepper.step(&state, k)?;
        frames.push(state.clone());
    }
    frames.reverse();
    let mut p1 = Vec::with_capacity(n + 1);
    let mut p2 = Vec::with_capacity(n + 1);
    let mut p3 = Vec::with_capacity(n + 1);
    for f in frames {
        p1.push(f.p1);
        p2.push(f.p2);
        p3.push(f.p3);
    }
    Ok(AdjointTrajectory {
        p1: FieldSeries::new(g, p1)?,
        p2: FieldSeries::new(g, p2)?,
        p3: FieldSeries::new(g, p3)?,
    })
}

pub fn adjoint_report(adj: &AdjointTrajectory, config: &ProblemConfig) -> Result<NormReport> {
    let mut r = NormReport::new();
    r.insert("p1.C0_L2", bochner_norm(&adj.p1, TimeExponent::Inf, SpatialNorm::L2))?;
    r.insert("p1.L2_H1", bochner_norm(&adj.p1, TimeExponent::P(2.0), SpatialNorm::H1))?;
    r.insert("p1.L4_H1", bochner_norm(&adj.p1, TimeExponent::P(4.0), SpatialNorm::H1))?;
    r.insert("p3.C0_L2", bochner_norm(&adj.p3, TimeExponent::Inf, SpatialNorm::L2))?;
    if config.kind() == SystemKind::Bidomain {
        r.insert("p2.L2_H1", bochner_norm(&adj.p2, TimeExponent::P(2.0), SpatialNorm::H1))?;
    }
    Ok(r)
}

/// Adjoint trajectory plus its norm report.
pub fn run_adjoint(
    traj: &Trajectory,
    config: &ProblemConfig,
    cost: &CostConfig,
) -> Result<(AdjointTrajectory, NormReport)> {
    let adj = solve_adjoint(traj, config, cost)?;
    let report = adjoint_report(&adj, config)?;
    Ok((adj, report))
}
