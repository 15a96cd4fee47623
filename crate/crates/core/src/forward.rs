//! Semi-implicit time integration of the monodomain system and of the
//! reduced bidomain system: implicit diffusion, explicit ionic current,
//! exponential gating update.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    cg_solve, reduced_rhs_s, ReducedBidomainOperator, SolverSettings, SparseOperator,
    SystemOperators,
};
use crate::error::{Error, Result};
use crate::exec::norm2;
use crate::grid::{
    bochner_norm, dual_norm_of_load, integrate, FieldSeries, Grid, NormReport, ScalarField,
    SpatialNorm, TimeExponent,
};
use crate::ionic::{gating_exact_update, i_ion, IonicParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Monodomain,
    Bidomain,
}

/// Everything one forward solve needs.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    kind: SystemKind,
    grid: Grid,
    ops: Arc<SystemOperators>,
    ionic: IonicParams,
    phi0: ScalarField,
    w0: ScalarField,
    i_i: FieldSeries,
    i_e: FieldSeries,
    solver: SolverSettings,
    reaction: bool,
}

/// Relative tolerance on `∫(I_i + I_e)` accepted by bidomain configs.
const COMPATIBILITY_TOL: f64 = 1e-9;

impl ProblemConfig {
    /// The time partition is taken from the control series; operators,
    /// initial data and controls must share the spatial grid.
    pub fn new(
        kind: SystemKind,
        ops: Arc<SystemOperators>,
        ionic: IonicParams,
        phi0: ScalarField,
        w0: ScalarField,
        i_i: FieldSeries,
        i_e: FieldSeries,
    ) -> Result<Self> {
        ionic.validate()?;
        let grid = *i_e.grid();
        if i_i.grid() != &grid {
            return Err(Error::validation(
                "controls",
                "I_i and I_e use different grids or time partitions",
            ));
        }
        for (name, g) in [
            ("operators", ops.grid()),
            ("initial potential", phi0.grid()),
            ("initial gating", w0.grid()),
        ] {
            if !g.same_space(&grid) {
                return Err(Error::validation(
                    "problem",
                    format!("{name} live on a different spatial grid"),
                ));
            }
        }
        if !phi0.is_finite() || !w0.is_finite() || !i_i.is_finite() || !i_e.is_finite() {
            return Err(Error::validation("problem", "non-finite data"));
        }
        let cfg = ProblemConfig {
            kind,
            grid,
            ops,
            ionic,
            phi0,
            w0,
            i_i,
            i_e,
            solver: SolverSettings::default(),
            reaction: true,
        };
        cfg.check_compatibility()?;
        Ok(cfg)
    }

    fn check_compatibility(&self) -> Result<()> {
        if self.kind == SystemKind::Monodomain {
            return Ok(());
        }
        for k in 0..self.grid.n_frames() {
            let sum = self.i_i.frame(k).zip_map(self.i_e.frame(k), |a, b| a + b);
            let mean = integrate(&sum);
            let scale = integrate(&sum.map(f64::abs));
            if mean.abs() > COMPATIBILITY_TOL * scale {
                return Err(Error::Compatibility { mean, norm: scale });
            }
        }
        Ok(())
    }

    pub fn with_solver(mut self, solver: SolverSettings) -> Self {
        self.solver = solver;
        self
    }

    /// Drops the ionic current from the potential equation (pure diffusion).
    pub fn without_reaction(mut self) -> Self {
        self.reaction = false;
        self
    }

    /// Same data for the other system.
    pub fn with_kind(&self, kind: SystemKind) -> Result<Self> {
        let mut c = self.clone();
        c.kind = kind;
        c.check_compatibility()?;
        Ok(c)
    }

    /// Replaces the extracellular control.
    pub fn with_extracellular(&self, i_e: FieldSeries) -> Result<Self> {
        if i_e.grid() != &self.grid {
            return Err(Error::validation("controls", "I_e uses a different grid"));
        }
        if !i_e.is_finite() {
            return Err(Error::validation("controls", "non-finite I_e"));
        }
        let mut c = self.clone();
        c.i_e = i_e;
        c.check_compatibility()?;
        Ok(c)
    }

    pub fn with_controls(&self, i_i: FieldSeries, i_e: FieldSeries) -> Result<Self> {
        Self::new(self.kind, self.ops.clone(), self.ionic, self.phi0.clone(), self.w0.clone(), i_i, i_e)
            .map(|c| c.with_solver(self.solver))
            .map(|c| if self.reaction { c } else { c.without_reaction() })
    }

    pub fn with_initial(&self, phi0: ScalarField, w0: ScalarField) -> Result<Self> {
        Self::new(self.kind, self.ops.clone(), self.ionic, phi0, w0, self.i_i.clone(), self.i_e.clone())
            .map(|c| c.with_solver(self.solver))
            .map(|c| if self.reaction { c } else { c.without_reaction() })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ops(&self) -> &SystemOperators {
        &self.ops
    }

    pub fn ops_arc(&self) -> &Arc<SystemOperators> {
        &self.ops
    }

    pub fn ionic(&self) -> &IonicParams {
        &self.ionic
    }

    pub fn phi0(&self) -> &ScalarField {
        &self.phi0
    }

    pub fn w0(&self) -> &ScalarField {
        &self.w0
    }

    pub fn i_i(&self) -> &FieldSeries {
        &self.i_i
    }

    pub fn i_e(&self) -> &FieldSeries {
        &self.i_e
    }

    pub fn solver(&self) -> &SolverSettings {
        &self.solver
    }

    pub fn reaction(&self) -> bool {
        self.reaction
    }

    pub(crate) fn ion(&self, phi: f64, w: f64) -> f64 {
        if self.reaction {
            i_ion(&self.ionic, phi, w)
        } else {
            0.0
        }
    }
}

/// Per frame, shifts `I_e` by the spatial mean of `I_i + I_e`.
pub fn compatibility_enforce(i_i: &FieldSeries, i_e: &FieldSeries) -> (FieldSeries, FieldSeries) {
    let measure = i_e.grid().measure();
    let frames = i_i
        .frames()
        .iter()
        .zip(i_e.frames())
        .map(|(a, b)| {
            let mean = integrate(&a.zip_map(b, |x, y| x + y)) / measure;
            b.map(|v| v - mean)
        })
        .collect();
    (
        i_i.clone(),
        FieldSeries::new(*i_e.grid(), frames).expect("same layout as the input"),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub phi_tr: ScalarField,
    /// Zero for the monodomain system.
    pub phi_e: ScalarField,
    pub w: ScalarField,
}

impl SystemState {
    pub fn is_finite(&self) -> bool {
        self.phi_tr.is_finite() && self.phi_e.is_finite() && self.w.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub phi_tr: FieldSeries,
    pub phi_e: FieldSeries,
    pub w: FieldSeries,
}

impl Trajectory {
    pub fn state(&self, k: usize) -> SystemState {
        SystemState {
            t: self.phi_tr.grid().time(k),
            phi_tr: self.phi_tr.frame(k).clone(),
            phi_e: self.phi_e.frame(k).clone(),
            w: self.w.frame(k).clone(),
        }
    }
}

enum Implicit<'a> {
    Matrix(SparseOperator),
    Reduced(ReducedBidomainOperator<'a>),
}

/// Advances states of one configuration; builds the implicit operator once.
pub struct Stepper<'a> {
    config: &'a ProblemConfig,
    implicit: Implicit<'a>,
}

impl<'a> Stepper<'a> {
    pub fn new(config: &'a ProblemConfig) -> Self {
        let dt = config.grid.dt();
        let implicit = match config.kind {
            SystemKind::Monodomain => Implicit::Matrix(config.ops.monodomain_matrix(dt)),
            SystemKind::Bidomain => Implicit::Reduced(ReducedBidomainOperator::new(
                &config.ops,
                dt,
                config.solver.inner(),
            )),
        };
        Stepper { config, implicit }
    }

    /// Initial state; for the bidomain system `φ_e` is recovered from the
    /// initial potential and the controls at `t = 0`.
    pub fn initial_state(&self) -> Result<SystemState> {
        let c = self.config;
        let phi_e = self.recover_extracellular(0, &c.phi0, None)?;
        Ok(SystemState {
            t: 0.0,
            phi_tr: c.phi0.clone(),
            phi_e,
            w: c.w0.clone(),
        })
    }

    /// Solves `K_ie φ_e = Mass(I_i + I_e) − K_i φ_tr` at frame `k`.
    fn recover_extracellular(
        &self,
        k: usize,
        phi_tr: &ScalarField,
        x0: Option<&[f64]>,
    ) -> Result<ScalarField> {
        let c = self.config;
        if c.kind == SystemKind::Monodomain {
            return Ok(ScalarField::zeros(c.grid));
        }
        let ops = &c.ops;
        let sum: Vec<f64> = c
            .i_i
            .frame(k)
            .values()
            .iter()
            .zip(c.i_e.frame(k).values())
            .map(|(a, b)| a + b)
            .collect();
        let kphi = ops.k_i().mul(phi_tr.values());
        let load: Vec<f64> = ops.load(&sum).iter().zip(&kphi).map(|(m, k)| m - k).collect();
        let x = ops.solve_extracellular(&load, &c.solver.inner(), x0)?;
        ScalarField::new(c.grid, x)
    }

    /// Advances from frame `k` to `k + 1`.
    pub fn step(&self, state: &SystemState, k: usize) -> Result<SystemState> {
        let c = self.config;
        let ops = &c.ops;
        let dt = c.grid.dt();
        let phi = state.phi_tr.values();
        let w = state.w.values();
        let mass = ops.mass();
        let mut rhs: Vec<f64> = (0..phi.len())
            .map(|i| mass[i] * (phi[i] - dt * c.ion(phi[i], w[i])))
            .collect();
        let diverged = || Error::Divergence {
            step: k + 1,
            phase: "forward",
        };
        let solution = match &self.implicit {
            Implicit::Matrix(a) => {
                let lam = ops.lambda();
                let ii = c.i_i.frame(k).values();
                let ie = c.i_e.frame(k).values();
                for i in 0..rhs.len() {
                    rhs[i] += dt * mass[i] * (lam * ii[i] - ie[i]) / (1.0 + lam);
                }
                if !norm2(&rhs).is_finite() {
                    return Err(diverged());
                }
                cg_solve(a, &rhs, Some(phi), &c.solver.outer())?
            }
            Implicit::Reduced(a) => {
                let s = reduced_rhs_s(ops, c.i_i.frame(k), c.i_e.frame(k), &c.solver.inner())?;
                for i in 0..rhs.len() {
                    rhs[i] += dt * s[i];
                }
                if !norm2(&rhs).is_finite() {
                    return Err(diverged());
                }
                cg_solve(a, &rhs, Some(phi), &c.solver.outer())?
            }
        };
        let phi_next = ScalarField::new(c.grid, solution.x)?;
        let pn = phi_next.values();
        let w_next: Vec<f64> = (0..pn.len())
            .map(|i| gating_exact_update(&c.ionic, w[i], phi[i], pn[i], dt))
            .collect();
        let phi_e = self.recover_extracellular(k + 1, &phi_next, Some(state.phi_e.values()))?;
        let next = SystemState {
            t: c.grid.time(k + 1),
            phi_tr: phi_next,
            phi_e,
            w: ScalarField::new(c.grid, w_next)?,
        };
        if !next.is_finite() {
            return Err(diverged());
        }
        Ok(next)
    }
}

fn check_kind(config: &ProblemConfig, kind: SystemKind) -> Result<()> {
    if config.kind != kind {
        return Err(Error::Config(format!(
            "configuration describes the {:?} system",
            config.kind
        )));
    }
    Ok(())
}

/// One monodomain step from frame `k`.
pub fn step_monodomain(state: &SystemState, config: &ProblemConfig, k: usize) -> Result<SystemState> {
    check_kind(config, SystemKind::Monodomain)?;
    Stepper::new(config).step(state, k)
}

/// One reduced bidomain step from frame `k`, including recovery of `φ_e`.
pub fn step_bidomain(state: &SystemState, config: &ProblemConfig, k: usize) -> Result<SystemState> {
    check_kind(config, SystemKind::Bidomain)?;
    Stepper::new(config).step(state, k)
}

/// Full trajectory without norm bookkeeping.
pub fn simulate(config: &ProblemConfig) -> Result<Trajectory> {
    let stepper = Stepper::new(config);
    let n = config.grid.n_frames();
    let mut phi = Vec::with_capacity(n);
    let mut phi_e = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut state = stepper.initial_state()?;
    for k in 0..n {
        if k > 0 {
            state = stepper.step(&state, k - 1)?;
        }
        phi.push(state.phi_tr.clone());
        phi_e.push(state.phi_e.clone());
        w.push(state.w.clone());
    }
    let g = config.grid;
    Ok(Trajectory {
        phi_tr: FieldSeries::new(g, phi)?,
        phi_e: FieldSeries::new(g, phi_e)?,
        w: FieldSeries::new(g, w)?,
    })
}

/// Norms of the a-priori bundle of a trajectory. The time-derivative entries
/// use backward differences, the potential's in the Riesz dual norm.
pub fn trajectory_report(traj: &Trajectory, config: &ProblemConfig) -> Result<NormReport> {
    let mut r = NormReport::new();
    let phi = &traj.phi_tr;
    r.insert("phi_tr.C0_L2", bochner_norm(phi, TimeExponent::Inf, SpatialNorm::L2))?;
    r.insert("phi_tr.L2_H1", bochner_norm(phi, TimeExponent::P(2.0), SpatialNorm::H1))?;
    r.insert("phi_tr.L4_OmegaT", bochner_norm(phi, TimeExponent::P(4.0), SpatialNorm::L4))?;
    r.insert("phi_tr.L4_H1", bochner_norm(phi, TimeExponent::P(4.0), SpatialNorm::H1))?;
    r.insert("w.C0_L2", bochner_norm(&traj.w, TimeExponent::Inf, SpatialNorm::L2))?;
    r.insert("w.L2_L2", bochner_norm(&traj.w, TimeExponent::P(2.0), SpatialNorm::L2))?;
    r.insert("w.dt_L2_L2", crate::grid::time_derivative_l2_sq(&traj.w).sqrt())?;
    r.insert("phi_tr.dt_L43_dual", time_derivative_dual(phi, config.ops(), 4.0 / 3.0)?)?;
    if config.kind == SystemKind::Bidomain {
        r.insert("phi_e.L2_H1", bochner_norm(&traj.phi_e, TimeExponent::P(2.0), SpatialNorm::H1))?;
    }
    Ok(r)
}

/// `(Σ_k dt ‖(u^k − u^{k−1})/dt‖_*^p)^{1/p}`
pub fn time_derivative_dual(series: &FieldSeries, ops: &SystemOperators, p: f64) -> Result<f64> {
    let dt = series.grid().dt();
    let mut s = 0.0;
    for k in 1..series.n_frames() {
        let diff: Vec<f64> = series
            .frame(k)
            .values()
            .iter()
            .zip(series.frame(k - 1).values())
            .map(|(a, b)| (a - b) / dt)
            .collect();
        s += dt * dual_norm_of_load(&ops.load(&diff), ops.riesz())?.powf(p);
    }
    Ok(s.powf(1.0 / p))
}

/// Trajectory plus its a-priori norm report.
pub fn run_forward(config: &ProblemConfig) -> Result<(Trajectory, NormReport)> {
    let traj = simulate(config)?;
    let report = trajectory_report(&traj, config)?;
    Ok((traj, report))
}
