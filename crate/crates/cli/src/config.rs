//! TOML run description: parsing, validation and problem construction.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use bidomain::adjoint::{CostConfig, CostWeights};
use bidomain::assembly::{SolverSettings, SystemOperators};
use bidomain::control::ControlProblem;
use bidomain::forward::{compatibility_enforce, simulate, ProblemConfig, SystemKind};
use bidomain::grid::{integrate, read_series, FieldSeries, Grid, ScalarField, SymTensor, TensorField};
use bidomain::ionic::{IonicModel, IonicParams};
use bidomain::presets::pulse;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub geometry: Geometry,
    pub model: Model,
    pub tensors: Tensors,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub control: Control,
    #[serde(default)]
    pub cost: Cost,
    #[serde(default)]
    pub solver: Solver,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub dim: usize,
    pub nodes: Vec<usize>,
    pub lengths: Vec<f64>,
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub kind: SystemKind,
    pub ionic: IonicModel,
    #[serde(default = "defaults::a")]
    pub a: f64,
    #[serde(default = "defaults::b")]
    pub b: f64,
    #[serde(default = "defaults::kappa")]
    pub kappa: f64,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
}

mod defaults {
    use bidomain::ionic::{IonicModel, IonicParams};

    fn p() -> IonicParams {
        IonicParams::new(IonicModel::RogersMcCulloch)
    }
    pub fn a() -> f64 {
        p().a
    }
    pub fn b() -> f64 {
        p().b
    }
    pub fn kappa() -> f64 {
        p().kappa
    }
    pub fn eps() -> f64 {
        p().eps
    }
    pub fn one() -> f64 {
        1.0
    }
}

/// Either `isotropic = σ` or the full symmetric `entries` matrix, uniform
/// over the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isotropic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tensors {
    pub intracellular: TensorSpec,
    /// Defaults to `lambda · intracellular`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracellular: Option<TensorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(default)]
    pub phi0: f64,
    #[serde(default)]
    pub w0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Current {
    Intracellular,
    Extracellular,
}

/// Gaussian bump in space times a `sin²` window on `[t0, t1]`, or a
/// snapshot file matching the geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stimulus {
    pub current: Current,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "defaults::one")]
    pub width: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub t1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Control {
    #[serde(default)]
    pub stimulus: Vec<Stimulus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// Resting potential.
    Zero,
    /// Trajectory with `I_e = 0`.
    Uncontrolled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cost {
    #[serde(default = "defaults::one")]
    pub w_phi: f64,
    #[serde(default)]
    pub w_eta: f64,
    #[serde(default)]
    pub w_gate: f64,
    #[serde(default = "Cost::default_mu")]
    pub mu: f64,
    #[serde(default = "Cost::default_target")]
    pub target: TargetKind,
    /// Snapshot with `φ_des`; overrides `target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_file: Option<PathBuf>,
    /// Box corners of the control region; whole domain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_upper: Option<Vec<f64>>,
    #[serde(default = "Cost::default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "Cost::default_radius")]
    pub radius: f64,
}

impl Cost {
    fn default_mu() -> f64 {
        CostWeights::default().mu
    }
    fn default_target() -> TargetKind {
        TargetKind::Zero
    }
    fn default_max_iter() -> usize {
        50
    }
    fn default_radius() -> f64 {
        1e3
    }
}

impl Default for Cost {
    fn default() -> Self {
        toml::from_str("").expect("cost defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    #[serde(default = "Solver::default_tol")]
    pub tol: f64,
    #[serde(default = "Solver::default_inner")]
    pub inner_tol: f64,
}

impl Solver {
    fn default_tol() -> f64 {
        SolverSettings::default().tol
    }
    fn default_inner() -> f64 {
        SolverSettings::default().inner_tol
    }
}

impl Default for Solver {
    fn default() -> Self {
        Solver {
            tol: Self::default_tol(),
            inner_tol: Self::default_inner(),
        }
    }
}

/// Parses and validates a config file. Relative stimulus and target paths
/// are resolved against the config's directory.
pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("E_IO", format!("{}: {e}", path.display())))?;
    let mut cfg = parse_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for s in &mut cfg.control.stimulus {
        if let Some(f) = &mut s.file {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
    }
    if let Some(f) = &mut cfg.cost.target_file {
        if f.is_relative() {
            *f = base.join(&*f);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses TOML text without checking files.
pub fn parse_str(text: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        let msg = e.message().trim_end();
        match line {
            Some(l) => CliError::new("E_CONFIG", format!("line {l}: {msg}")),
            None => CliError::new("E_CONFIG", msg),
        }
    })?;
    cfg.validate_values()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Numeric and structural checks, then file existence.
    pub fn validate(&self) -> CliResult<()> {
        self.validate_values()?;
        for (i, s) in self.control.stimulus.iter().enumerate() {
            if let Some(f) = &s.file {
                if !f.exists() {
                    return Err(CliError::key(&format!("control.stimulus[{i}].file"), format!("{} does not exist", f.display())));
                }
            }
        }
        if let Some(f) = &self.cost.target_file {
            if !f.exists() {
                return Err(CliError::key("cost.target_file", format!("{} does not exist", f.display())));
            }
        }
        Ok(())
    }

    fn validate_values(&self) -> CliResult<()> {
        let g = &self.geometry;
        if !(1..=3).contains(&g.dim) {
            return Err(CliError::key("geometry.dim", format!("{} is not 1, 2 or 3", g.dim)));
        }
        if g.nodes.len() != g.dim {
            return Err(CliError::key("geometry.nodes", format!("needs {} entries", g.dim)));
        }
        if g.lengths.len() != g.dim {
            return Err(CliError::key("geometry.lengths", format!("needs {} entries", g.dim)));
        }
        if let Some(n) = g.nodes.iter().find(|&&n| n < 2) {
            return Err(CliError::key("geometry.nodes", format!("{n} is below 2")));
        }
        if let Some(l) = g.lengths.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(CliError::key("geometry.lengths", format!("{l} is not positive")));
        }
        if !(g.t_final > 0.0 && g.t_final.is_finite()) {
            return Err(CliError::key("geometry.t_final", format!("{} is not positive", g.t_final)));
        }
        if g.steps == 0 {
            return Err(CliError::key("geometry.steps", "must be at least 1"));
        }
        self.ionic()
            .validate()
            .map_err(|e| match e {
                bidomain::Error::Validation { what, reason } => CliError::key(&format!("model.{what}"), reason),
                other => other.into(),
            })?;
        let t = &self.tensors;
        if let Some(l) = t.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CliError::key("tensors.lambda", format!("{l} is not positive")));
            }
        }
        if t.extracellular.is_none() && t.lambda.is_none() {
            return Err(CliError::key("tensors.lambda", "required when tensors.extracellular is absent"));
        }
        if self.model.kind == SystemKind::Monodomain && t.lambda.is_none() {
            return Err(CliError::key("tensors.lambda", "required for the monodomain system"));
        }
        self.tensor(&t.intracellular, "tensors.intracellular")?;
        if let Some(e) = &t.extracellular {
            self.tensor(e, "tensors.extracellular")?;
        }
        for (i, s) in self.control.stimulus.iter().enumerate() {
            let key = |k: &str| format!("control.stimulus[{i}].{k}");
            if s.file.is_none() {
                if s.center.len() != g.dim {
                    return Err(CliError::key(&key("center"), format!("needs {} entries", g.dim)));
                }
                if !(s.width > 0.0) {
                    return Err(CliError::key(&key("width"), format!("{} is not positive", s.width)));
                }
                if !(s.t1 > s.t0) {
                    return Err(CliError::key(&key("t1"), format!("{} is not after t0 = {}", s.t1, s.t0)));
                }
            }
        }
        let c = &self.cost;
        for (k, v) in [("cost.w_phi", c.w_phi), ("cost.w_eta", c.w_eta), ("cost.w_gate", c.w_gate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::key(k, format!("{v} is negative")));
            }
        }
        if !(c.mu > 0.0 && c.mu.is_finite()) {
            return Err(CliError::key("cost.mu", format!("{} is not positive", c.mu)));
        }
        if !(c.radius > 0.0) {
            return Err(CliError::key("cost.radius", format!("{} is not positive", c.radius)));
        }
        for (k, v) in [("cost.region_lower", &c.region_lower), ("cost.region_upper", &c.region_upper)] {
            if let Some(v) = v {
                if v.len() != g.dim {
                    return Err(CliError::key(k, format!("needs {} entries", g.dim)));
                }
            }
        }
        for (k, v) in [("solver.tol", self.solver.tol), ("solver.inner_tol", self.solver.inner_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::key(k, format!("{v} is outside (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn ionic(&self) -> IonicParams {
        let m = &self.model;
        IonicParams {
            kind: m.ionic,
            a: m.a,
            b: m.b,
            kappa: m.kappa,
            eps: m.eps,
        }
    }

    pub fn grid(&self) -> CliResult<Grid> {
        let g = &self.geometry;
        Ok(Grid::new(&g.nodes, &g.lengths, g.t_final, g.steps)?)
    }

    fn tensor_cell(&self, spec: &TensorSpec, key: &str) -> CliResult<SymTensor> {
        let d = self.geometry.dim;
        let mut m = [[0.0; 3]; 3];
        match (spec.isotropic, &spec.entries) {
            (Some(s), None) => {
                if !(s > 0.0) {
                    return Err(CliError::key(&format!("{key}.isotropic"), format!("{s} is not positive")));
                }
                for (i, row) in m.iter_mut().enumerate().take(d) {
                    row[i] = s;
                }
            }
            (None, Some(rows)) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(CliError::key(&format!("{key}.entries"), format!("needs a {d}x{d} matrix")));
                }
                for i in 0..d {
                    for j in 0..d {
                        m[i][j] = rows[i][j];
                    }
                }
            }
            _ => return Err(CliError::key(key, "give exactly one of isotropic or entries")),
        }
        Ok(m)
    }

    fn tensor(&self, spec: &TensorSpec, key: &str) -> CliResult<SymTensor> {
        let m = self.tensor_cell(spec, key)?;
        // Probe symmetry and ellipticity on a one-cell grid.
        let probe = Grid::new(&vec![2; self.geometry.dim], &vec![1.0; self.geometry.dim], 1.0, 1)?;
        TensorField::uniform(probe, m).map_err(|e| CliError::key(key, e))?;
        Ok(m)
    }

    pub fn operators(&self) -> CliResult<SystemOperators> {
        let g = self.grid()?;
        let t = &self.tensors;
        let m_i = TensorField::uniform(g, self.tensor(&t.intracellular, "tensors.intracellular")?)?;
        Ok(match &t.extracellular {
            None => SystemOperators::proportional(m_i, t.lambda.expect("validated"))?,
            Some(e) => {
                let m_e = TensorField::uniform(g, self.tensor(e, "tensors.extracellular")?)?;
                let lambda = t.lambda.or_else(|| m_i.proportionality(&m_e)).unwrap_or(1.0);
                SystemOperators::new(m_i, m_e, lambda)?
            }
        })
    }

    /// Control series before any compatibility adjustment.
    pub fn raw_controls(&self, grid: &Grid) -> CliResult<(FieldSeries, FieldSeries)> {
        let mut i_i = FieldSeries::zeros(*grid);
        let mut i_e = FieldSeries::zeros(*grid);
        for s in &self.control.stimulus {
            let series = match &s.file {
                Some(f) => read_series(f, grid)?,
                None => pulse(grid, s.amplitude, &s.center, s.width, s.t0, s.t1),
            };
            match s.current {
                Current::Intracellular => i_i = i_i.add_scaled(1.0, &series),
                Current::Extracellular => i_e = i_e.add_scaled(1.0, &series),
            }
        }
        Ok((i_i, i_e))
    }

    /// Warnings about data adjusted before solving.
    pub fn warnings(&self) -> CliResult<Vec<String>> {
        let mut out = Vec::new();
        if self.model.kind == SystemKind::Bidomain {
            let g = self.grid()?;
            let (i_i, i_e) = self.raw_controls(&g)?;
            let worst = (0..g.n_frames())
                .map(|k| integrate(&i_i.frame(k).zip_map(i_e.frame(k), |a, b| a + b)).abs())
                .fold(0.0, f64::max);
            if worst > 1e-12 {
                out.push(format!(
                    "stimulus violates the compatibility condition (|∫(I_i+I_e)| up to {worst:.3e}); I_e will be shifted by its frame mean"
                ));
            }
        }
        Ok(out)
    }

    pub fn problem(&self) -> CliResult<ProblemConfig> {
        let g = self.grid()?;
        self.problem_on(g)
    }

    /// Same problem on another grid with the same domain and horizon.
    pub fn problem_on(&self, g: Grid) -> CliResult<ProblemConfig> {
        self.build(g, self.model.kind)
    }

    /// The configured data posed for `kind`; bidomain stimuli are made
    /// compatible.
    pub fn problem_as(&self, kind: SystemKind) -> CliResult<ProblemConfig> {
        self.build(self.grid()?, kind)
    }

    fn build(&self, g: Grid, kind: SystemKind) -> CliResult<ProblemConfig> {
        let mut scaled = self.clone();
        scaled.geometry.nodes = g.nodes_per_axis().to_vec();
        scaled.geometry.steps = g.n_steps();
        let ops = Arc::new(scaled.operators()?);
        let (i_i, mut i_e) = scaled.raw_controls(&g)?;
        if kind == SystemKind::Bidomain {
            i_e = compatibility_enforce(&i_i, &i_e).1;
        }
        let cfg = ProblemConfig::new(
            kind,
            ops,
            self.ionic(),
            ScalarField::constant(g, self.initial.phi0),
            ScalarField::constant(g, self.initial.w0),
            i_i,
            i_e,
        )?
        .with_solver(SolverSettings {
            tol: self.solver.tol,
            inner_tol: self.solver.inner_tol,
        });
        Ok(cfg)
    }

    pub fn control_mask(&self, g: &Grid) -> ScalarField {
        let c = &self.cost;
        let d = g.dim();
        let lo = c.region_lower.clone().unwrap_or(vec![f64::NEG_INFINITY; d]);
        let hi = c.region_upper.clone().unwrap_or(vec![f64::INFINITY; d]);
        ScalarField::from_fn(*g, |x| {
            if (0..d).all(|a| x[a] >= lo[a] && x[a] <= hi[a]) { 1.0 } else { 0.0 }
        })
    }

    pub fn cost_config(&self, problem: &ProblemConfig) -> CliResult<CostConfig> {
        let g = *problem.grid();
        let c = &self.cost;
        let phi_des = match (&c.target_file, c.target) {
            (Some(f), _) => read_series(f, &g)?,
            (None, TargetKind::Zero) => FieldSeries::zeros(g),
            (None, TargetKind::Uncontrolled) => {
                let mut i_e = FieldSeries::zeros(g);
                if problem.kind() == SystemKind::Bidomain {
                    i_e = compatibility_enforce(problem.i_i(), &i_e).1;
                }
                simulate(&problem.with_extracellular(i_e)?)?.phi_tr
            }
        };
        let weights = CostWeights {
            w_phi: c.w_phi,
            w_eta: c.w_eta,
            w_gate: c.w_gate,
            mu: c.mu,
        };
        Ok(CostConfig::new(phi_des, None, weights, self.control_mask(&g))?)
    }

    pub fn control_problem(&self) -> CliResult<ControlProblem> {
        self.control_problem_on(self.grid()?)
    }

    pub fn control_problem_on(&self, g: Grid) -> CliResult<ControlProblem> {
        let problem = self.problem_on(g)?;
        let cost = self.cost_config(&problem)?;
        let mut p = ControlProblem::new(problem, cost)?;
        p.max_iter = self.cost.max_iter;
        p.radius = self.cost.radius;
        Ok(p)
    }
}
