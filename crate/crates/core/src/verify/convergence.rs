use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::SystemOperators;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{simulate, ProblemConfig, SystemKind};
use crate::grid::{lp_norm, FieldSeries, Grid, ScalarField, TensorField};
use crate::ionic::{IonicModel, IonicParams};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Mean of the observed orders.
    Order(f64),
    Inconclusive(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    /// Nodes per axis (space) or time steps (time) of each level.
    pub resolutions: Vec<usize>,
    /// Error against the exact solution, or difference between successive
    /// levels, in `C⁰L²` on the coarser level.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub verdict: Verdict,
}

impl ConvergenceStudy {
    pub fn order(&self) -> Option<f64> {
        match self.verdict {
            Verdict::Order(p) => Some(p),
            Verdict::Inconclusive(_) => None,
        }
    }

    /// `resolution,error,order` (order empty on the first row).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("resolution,error,order\n");
        for (i, (r, e)) in self.resolutions.iter().zip(&self.errors).enumerate() {
            let o = if i == 0 { String::new() } else { format!("{:e}", self.orders[i - 1]) };
            s.push_str(&format!("{r},{e:e},{o}\n"));
        }
        s
    }
}

/// Orders `log2(e_l / e_{l+1})` for successive halvings. Zero or
/// non-decreasing errors make the study inconclusive.
pub fn observed_orders(resolutions: Vec<usize>, errors: Vec<f64>) -> ConvergenceStudy {
    let mut orders = Vec::new();
    let mut problem = None;
    for w in errors.windows(2) {
        if !(w[0] > 0.0 && w[1] > 0.0) || !w[0].is_finite() || !w[1].is_finite() {
            problem = Some("zero or non-finite difference; order undefined".to_string());
            orders.push(f64::NAN);
        } else {
            if w[1] >= w[0] {
                problem = Some("differences do not decrease".to_string());
            }
            orders.push((w[0] / w[1]).log2());
        }
    }
    let verdict = match problem {
        Some(msg) => Verdict::Inconclusive(msg),
        None if orders.is_empty() => Verdict::Inconclusive("fewer than two levels".into()),
        None => Verdict::Order(orders.iter().sum::<f64>() / orders.len() as f64),
    };
    ConvergenceStudy {
        resolutions,
        errors,
        orders,
        verdict,
    }
}

/// Values of a fine-grid field at the nodes of the grid with half the
/// resolution per axis.
pub fn inject(fine: &ScalarField, coarse: &Grid) -> Result<ScalarField> {
    let fg = fine.grid();
    if fg.dim() != coarse.dim()
        || (0..fg.dim()).any(|a| fg.nodes3()[a] - 1 != 2 * (coarse.nodes3()[a] - 1))
    {
        return Err(Error::Config("grids are not nested by one halving".into()));
    }
    let v = fine.values();
    let values = (0..coarse.n_nodes())
        .map(|i| {
            let c = coarse.node_ijk(i);
            v[fg.node_index([2 * c[0], 2 * c[1], 2 * c[2]])]
        })
        .collect();
    ScalarField::new(*coarse, values)
}

fn c0_l2_distance(a: &FieldSeries, b: &FieldSeries, stride_b: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..a.n_frames() {
        let fb = b.frame(k * stride_b);
        let fb = if fb.grid().same_space(a.grid()) {
            fb.clone()
        } else {
            inject(fb, a.grid())?
        };
        let d = a.frame(k).zip_map(&fb, |x, y| x - y);
        worst = worst.max(lp_norm(&d, 2.0));
    }
    Ok(worst)
}

fn halve_space(g: &Grid) -> Result<Grid> {
    let nodes: Vec<usize> = g.nodes_per_axis().iter().map(|n| 2 * (n - 1) + 1).collect();
    Grid::new(&nodes, g.lengths(), g.t_final(), g.n_steps())
}

/// Builds a problem for a given grid.
pub type ProblemBuilder<'a> = dyn Fn(Grid) -> Result<ProblemConfig> + Sync + 'a;

/// Successive differences of the potential under spatial halving at a fixed
/// time partition.
pub fn spatial_self_convergence(build: &ProblemBuilder, coarsest: Grid, levels: usize) -> Result<ConvergenceStudy> {
    let mut grids = vec![coarsest];
    for _ in 1..levels {
        let next = halve_space(grids.last().unwrap())?;
        grids.push(next);
    }
    let trajs = Exec::default()
        .map(&grids, |g| build(*g).and_then(|c| simulate(&c)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut errors = Vec::new();
    for l in 0..levels.saturating_sub(1) {
        errors.push(c0_l2_distance(&trajs[l].phi_tr, &trajs[l + 1].phi_tr, 1)?);
    }
    Ok(observed_orders(grids.iter().take(errors.len()).map(|g| g.nodes3()[0]).collect(), errors))
}

/// Successive differences of the potential under halving of the time step
/// on a fixed spatial grid.
pub fn temporal_self_convergence(build: &ProblemBuilder, coarsest: Grid, levels: usize) -> Result<ConvergenceStudy> {
    let grids = (0..levels)
        .map(|l| coarsest.with_steps(coarsest.t_final(), coarsest.n_steps() << l))
        .collect::<Result<Vec<_>>>()?;
    let trajs = Exec::default()
        .map(&grids, |g| build(*g).and_then(|c| simulate(&c)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut errors = Vec::new();
    for l in 0..levels.saturating_sub(1) {
        errors.push(c0_l2_distance(&trajs[l].phi_tr, &trajs[l + 1].phi_tr, 2)?);
    }
    Ok(observed_orders(grids.iter().take(errors.len()).map(Grid::n_steps).collect(), errors))
}

/// Spatial and temporal self-convergence of one problem.
pub fn convergence_study(
    build: &ProblemBuilder,
    coarsest: Grid,
    levels: usize,
) -> Result<(ConvergenceStudy, ConvergenceStudy)> {
    if levels < 3 {
        return Err(Error::Config(format!("convergence needs at least 3 levels, got {levels}")));
    }
    Ok((
        spatial_self_convergence(build, coarsest, levels)?,
        temporal_self_convergence(build, coarsest, levels)?,
    ))
}

/// Pure diffusion on [0, 1] with `λ = 1`, `σ = 2/π²`, so that
/// `e^{−t} cos(πx)` is the exact potential.
pub fn heat_problem(nodes: usize, t_final: f64, n_steps: usize) -> Result<ProblemConfig> {
    let g = Grid::unit_interval(nodes, t_final, n_steps)?;
    let m_i = TensorField::isotropic(g, 2.0 / (PI * PI))?;
    let ops = Arc::new(SystemOperators::proportional(m_i, 1.0)?);
    Ok(ProblemConfig::new(
        SystemKind::Monodomain,
        ops,
        IonicParams::new(IonicModel::RogersMcCulloch),
        ScalarField::from_fn(g, |x| (PI * x[0]).cos()),
        ScalarField::zeros(g),
        FieldSeries::zeros(g),
        FieldSeries::zeros(g),
    )?
    .without_reaction())
}

/// `C⁰L²` error against `e^{−t} cos(πx)` for nodes `2^{m+l}+1`, with the
/// time step fine enough that the spatial error dominates.
pub fn heat_spatial_study(first_exponent: u32, levels: usize, t_final: f64, n_steps: usize) -> Result<ConvergenceStudy> {
    let nodes: Vec<usize> = (0..levels as u32).map(|l| (1usize << (first_exponent + l)) + 1).collect();
    let errors = Exec::default()
        .map(&nodes, |&n| -> Result<f64> {
            let cfg = heat_problem(n, t_final, n_steps)?;
            let traj = simulate(&cfg)?;
            let exact = FieldSeries::from_fn(*cfg.grid(), |x, t| (-t).exp() * (PI * x[0]).cos());
            c0_l2_distance(&traj.phi_tr, &exact, 1)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(observed_orders(nodes, errors))
}
