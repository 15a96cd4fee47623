use nalgebra::{Matrix2, Matrix3};

use super::Grid;
use crate::error::{Error, Result};

/// Symmetric conductivity matrix; only the leading `dim × dim` block is used.
pub type SymTensor = [[f64; 3]; 3];

/// Per-cell symmetric positive-definite tensors with cached ellipticity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    cells: Vec<SymTensor>,
    mu1: f64,
    mu2: f64,
}

impl TensorField {
    /// Validates symmetry and uniform ellipticity of every cell.
    pub fn new(grid: Grid, cells: Vec<SymTensor>) -> Result<Self> {
        if cells.len() != grid.n_cells() {
            return Err(Error::validation(
                "tensor field",
                format!("{} tensors for {} cells", cells.len(), grid.n_cells()),
            ));
        }
        let d = grid.dim();
        let mut mu1 = f64::INFINITY;
        let mut mu2 = 0.0f64;
        for (c, m) in cells.iter().enumerate() {
            let scale = (0..d)
                .flat_map(|i| (0..d).map(move |j| m[i][j].abs()))
                .fold(0.0, f64::max);
            for i in 0..d {
                for j in 0..i {
                    if (m[i][j] - m[j][i]).abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                        return Err(Error::validation(
                            "tensor field",
                            format!("cell {c} is not symmetric"),
                        ));
                    }
                }
            }
            let (lo, hi) = cell_eigen_range(m, d);
            if !(lo > 0.0) || !hi.is_finite() {
                return Err(Error::Ellipticity { cell: c, mu1: lo });
            }
            mu1 = mu1.min(lo);
            mu2 = mu2.max(hi);
        }
        Ok(TensorField {
            grid,
            cells,
            mu1,
            mu2,
        })
    }

    pub fn uniform(grid: Grid, m: SymTensor) -> Result<Self> {
        Self::new(grid, vec![m; grid.n_cells()])
    }

    pub fn isotropic(grid: Grid, sigma: f64) -> Result<Self> {
        Self::diagonal(grid, &[sigma; 3])
    }

    pub fn diagonal(grid: Grid, diag: &[f64]) -> Result<Self> {
        let mut m = [[0.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate().take(grid.dim()) {
            row[a] = *diag.get(a).ok_or_else(|| {
                Error::validation("tensor field", "diagonal shorter than the dimension")
            })?;
        }
        Self::uniform(grid, m)
    }

    /// Every cell multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let cells = self
            .cells
            .iter()
            .map(|m| m.map(|row| row.map(|v| v * factor)))
            .collect();
        Self::new(self.grid, cells)
    }

    /// Cell-wise sum, e.g. M_i + M_e.
    pub fn sum(&self, other: &TensorField) -> Result<Self> {
        if !self.grid.same_space(&other.grid) {
            return Err(Error::validation("tensor field", "grids differ"));
        }
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| {
                let mut m = *a;
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += b[i][j];
                    }
                }
                m
            })
            .collect();
        Self::new(self.grid, cells)
    }

    /// Returns `λ` when `other = λ · self` cell-wise (relative 1e-12).
    pub fn proportionality(&self, other: &TensorField) -> Option<f64> {
        if !self.grid.same_space(&other.grid) {
            return None;
        }
        let d = self.grid.dim();
        let mut ratio: Option<f64> = None;
        for (a, b) in self.cells.iter().zip(&other.cells) {
            for i in 0..d {
                for j in 0..d {
                    if a[i][j] != 0.0 {
                        let r = b[i][j] / a[i][j];
                        match ratio {
                            None => ratio = Some(r),
                            Some(q) if (q - r).abs() > 1e-12 * q.abs() => return None,
                            _ => {}
                        }
                    } else if b[i][j].abs() > 1e-14 {
                        return None;
                    }
                }
            }
        }
        ratio.filter(|r| *r > 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cell(&self, c: usize) -> &SymTensor {
        &self.cells[c]
    }

    pub fn cells(&self) -> &[SymTensor] {
        &self.cells
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }
}

/// Smallest and largest eigenvalue of the leading `d × d` block.
pub fn cell_eigen_range(m: &SymTensor, d: usize) -> (f64, f64) {
    match d {
        1 => (m[0][0], m[0][0]),
        2 => {
            let e = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
                .symmetric_eigen()
                .eigenvalues;
            (e.min(), e.max())
        }
        _ => {
            let e = Matrix3::from_fn(|i, j| m[i][j]).symmetric_eigen().eigenvalues;
            (e.min(), e.max())
        }
    }
}
