use super::cg::{cg_solve, CgOptions};
use super::sparse::{LinearOperator, SparseOperator};
use super::stiffness::assemble_stiffness;
use crate::error::{Error, Result};
use crate::exec::{dot, norm2};
use crate::grid::{Grid, ScalarField, TensorField};

/// Tolerances for the time-stepping solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative residual of the parabolic (outer) solves.
    pub tol: f64,
    /// Relative residual of the elliptic solves nested inside the reduced
    /// bidomain operator and of the extracellular recovery.
    pub inner_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-10,
            inner_tol: 1e-11,
        }
    }
}

impl SolverSettings {
    /// Tolerances for comparisons at the 1e-8 level and finite-difference
    /// gradient checks.
    pub fn tight() -> Self {
        SolverSettings {
            tol: 1e-12,
            inner_tol: 1e-13,
        }
    }

    pub fn outer(&self) -> CgOptions {
        CgOptions::with_tol(self.tol)
    }

    pub fn inner(&self) -> CgOptions {
        CgOptions::with_tol(self.inner_tol).deflated()
    }
}

/// Stiffness operators of `M_i` and `M_i + M_e`, the lumped mass, the Riesz
/// map used for dual norms, and the monodomain ratio `λ`.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    grid: Grid,
    m_i: TensorField,
    m_e: TensorField,
    k_i: SparseOperator,
    k_ie: SparseOperator,
    mass: Vec<f64>,
    riesz: SparseOperator,
    lambda: f64,
}

impl SystemOperators {
    pub fn new(m_i: TensorField, m_e: TensorField, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::validation("lambda", format!("{lambda} is not positive")));
        }
        let grid = *m_i.grid();
        let k_i = assemble_stiffness(&grid, &m_i)?;
        let k_ie = assemble_stiffness(&grid, &m_i.sum(&m_e)?)?;
        let mass = grid.weights();
        let k_id = assemble_stiffness(&grid, &TensorField::isotropic(grid, 1.0)?)?;
        let riesz = k_id.scaled_plus_diag(1.0, &mass);
        Ok(SystemOperators {
            grid,
            m_i,
            m_e,
            k_i,
            k_ie,
            mass,
            riesz,
            lambda,
        })
    }

    /// Operators for `M_e = λ M_i`.
    pub fn proportional(m_i: TensorField, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::validation("lambda", format!("{lambda} is not positive")));
        }
        let m_e = m_i.scaled(lambda)?;
        Self::new(m_i, m_e, lambda)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn m_i(&self) -> &TensorField {
        &self.m_i
    }

    pub fn m_e(&self) -> &TensorField {
        &self.m_e
    }

    pub fn k_i(&self) -> &SparseOperator {
        &self.k_i
    }

    pub fn k_ie(&self) -> &SparseOperator {
        &self.k_ie
    }

    /// Lumped mass (nodal weights).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn riesz(&self) -> &SparseOperator {
        &self.riesz
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `λ/(1+λ)`
    pub fn theta(&self) -> f64 {
        self.lambda / (1.0 + self.lambda)
    }

    /// `Mass · f`
    pub fn load(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.mass).map(|(v, w)| v * w).collect()
    }

    /// Returns `λ` when `M_e = λ M_i` cell-wise.
    pub fn proportionality(&self) -> Option<f64> {
        self.m_i.proportionality(&self.m_e)
    }

    /// `Mass + dt·θ·K_i`, the implicit monodomain operator.
    pub fn monodomain_matrix(&self, dt: f64) -> SparseOperator {
        self.k_i.scaled_plus_diag(dt * self.theta(), &self.mass)
    }

    /// Solves `K_ie u = load` on the zero-mean subspace without the
    /// compatibility test; the Euclidean mean of `load` is discarded.
    pub(crate) fn solve_extracellular(
        &self,
        load: &[f64],
        opts: &CgOptions,
        x0: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let opts = opts.deflated();
        let x = cg_solve(&self.k_ie, load, x0, &opts)?.x;
        Ok(weighted_zero_mean(&self.mass, x))
    }
}

fn weighted_zero_mean(w: &[f64], mut x: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let m = dot(w, &x) / total;
    x.iter_mut().for_each(|v| *v -= m);
    x
}

/// `(λ/(1+λ)) uᵀ K_i v`
pub fn monodomain_form(ops: &SystemOperators, u: &ScalarField, v: &ScalarField) -> f64 {
    ops.theta() * ops.k_i.quad_form(u.values(), v.values())
}

/// Rejects loads whose total `Σ L_i` is not negligible.
pub fn check_compatibility(load: &[f64]) -> Result<()> {
    let mean: f64 = load.iter().sum();
    let norm = norm2(load);
    if mean.abs() > 1e-8 * (load.len() as f64).sqrt() * norm {
        return Err(Error::Compatibility { mean, norm });
    }
    Ok(())
}

/// Solves `K_ie u = L` for a nodal load vector `L` with `Σ L_i ≈ 0`; the
/// result has zero spatial mean.
pub fn elliptic_solve_load(ops: &SystemOperators, load: &[f64], opts: &CgOptions) -> Result<ScalarField> {
    check_compatibility(load)?;
    let x = ops.solve_extracellular(load, opts, None)?;
    ScalarField::new(ops.grid, x)
}

/// Extracellular solve for a load density `f`: `K_ie u = Mass f`, zero mean.
pub fn bidomain_elliptic_solve(ops: &SystemOperators, load: &ScalarField) -> Result<ScalarField> {
    elliptic_solve_load(ops, &ops.load(load.values()), &CgOptions::default())
}

/// Nodal load of the reduced right-hand side:
/// `Mass I_i − K_i ψ̄` with `K_ie ψ̄ = Mass (I_i + I_e)`.
pub fn reduced_rhs_s(
    ops: &SystemOperators,
    i_i: &ScalarField,
    i_e: &ScalarField,
    opts: &CgOptions,
) -> Result<Vec<f64>> {
    let sum: Vec<f64> = i_i.values().iter().zip(i_e.values()).map(|(a, b)| a + b).collect();
    let psi = elliptic_solve_load(ops, &ops.load(&sum), opts)?;
    let kpsi = ops.k_i.mul(psi.values());
    Ok(ops
        .load(i_i.values())
        .iter()
        .zip(&kpsi)
        .map(|(m, k)| m - k)
        .collect())
}

/// `Mass + dt·A_h` with `A_h u = K_i u − K_i ψ̄`, `K_ie ψ̄ = K_i u`, applied
/// matrix-free through a nested elliptic solve.
pub struct ReducedBidomainOperator<'a> {
    ops: &'a SystemOperators,
    dt: f64,
    inner: CgOptions,
}

impl<'a> ReducedBidomainOperator<'a> {
    pub fn new(ops: &'a SystemOperators, dt: f64, inner: CgOptions) -> Self {
        ReducedBidomainOperator { ops, dt, inner }
    }
}

impl LinearOperator for ReducedBidomainOperator<'_> {
    fn dim(&self) -> usize {
        self.ops.grid.n_nodes()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let kx = self.ops.k_i.mul(x);
        let psi = self.ops.solve_extracellular(&kx, &self.inner, None)?;
        let kpsi = self.ops.k_i.mul(&psi);
        for i in 0..y.len() {
            y[i] = self.ops.mass[i] * x[i] + self.dt * (kx[i] - kpsi[i]);
        }
        Ok(())
    }

    fn diagonal(&self) -> Vec<f64> {
        let th = self.ops.theta();
        self.ops
            .k_i
            .diag()
            .iter()
            .zip(&self.ops.mass)
            .map(|(k, m)| m + self.dt * th * k)
            .collect()
    }
}
