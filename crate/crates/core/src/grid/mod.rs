//! Structured box grids over Ω × [0, T], nodal fields and the discrete norms.

mod io;
mod norms;
mod tensor;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_series, write_csv, write_series, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use norms::{
    bochner_norm, dual_norm, dual_norm_of_load, h1_norm, h1_seminorm_sq, integrate, lp_norm, series_dual_norm,
    time_derivative_l2_sq, zero_mean_project, SpatialNorm, TimeExponent,
};
pub use tensor::{cell_eigen_range, SymTensor, TensorField};

/// Axis-aligned box grid of nodes together with a uniform time partition.
///
/// Unused axes (beyond `dim`) carry a single node and unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    nodes: [usize; 3],
    lengths: [f64; 3],
    t_final: f64,
    n_steps: usize,
}

impl Grid {
    pub fn new(nodes: &[usize], lengths: &[f64], t_final: f64, n_steps: usize) -> Result<Self> {
        let dim = nodes.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::validation("grid", format!("dimension {dim} not in 1..=3")));
        }
        if lengths.len() != dim {
            return Err(Error::validation(
                "grid",
                format!("{} lengths given for {dim} axes", lengths.len()),
            ));
        }
        let mut n = [1usize; 3];
        let mut l = [1.0f64; 3];
        for a in 0..dim {
            if nodes[a] < 2 {
                return Err(Error::validation("grid", format!("axis {a} has fewer than 2 nodes")));
            }
            if !(lengths[a] > 0.0 && lengths[a].is_finite()) {
                return Err(Error::validation("grid", format!("axis {a} length must be positive")));
            }
            n[a] = nodes[a];
            l[a] = lengths[a];
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::validation("grid", "time horizon must be positive"));
        }
        if n_steps == 0 {
            return Err(Error::validation("grid", "at least one time step is required"));
        }
        Ok(Grid {
            dim,
            nodes: n,
            lengths: l,
            t_final,
            n_steps,
        })
    }

    /// `n` nodes on [0, 1].
    pub fn unit_interval(n: usize, t_final: f64, n_steps: usize) -> Result<Self> {
        Grid::new(&[n], &[1.0], t_final, n_steps)
    }

    /// `n × n` nodes on [0, 1]².
    pub fn unit_square(n: usize, t_final: f64, n_steps: usize) -> Result<Self> {
        Grid::new(&[n, n], &[1.0, 1.0], t_final, n_steps)
    }

    /// Same spatial layout with a different time partition.
    pub fn with_steps(&self, t_final: f64, n_steps: usize) -> Result<Self> {
        Grid::new(self.nodes_per_axis(), self.lengths(), t_final, n_steps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    /// Node counts padded with 1 for unused axes.
    pub fn nodes3(&self) -> [usize; 3] {
        self.nodes
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.nodes[axis] - 1) as f64
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_frames(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.iter().product()
    }

    /// |Ω|
    pub fn measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.nodes[0] * (ijk[1] + self.nodes[1] * ijk[2])
    }

    pub fn node_ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.nodes[0];
        let rest = idx / self.nodes[0];
        [i, rest % self.nodes[1], rest / self.nodes[1]]
    }

    /// Physical coordinates; unused axes read 0.
    pub fn node_coords(&self, idx: usize) -> [f64; 3] {
        let ijk = self.node_ijk(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = ijk[a] as f64 * self.h(a);
        }
        x
    }

    /// Lumped nodal volume (trapezoidal rule per axis).
    pub fn weight(&self, idx: usize) -> f64 {
        let ijk = self.node_ijk(idx);
        let mut w = 1.0;
        for (a, &i) in ijk.iter().enumerate().take(self.dim) {
            let h = self.h(a);
            w *= if i == 0 || i + 1 == self.nodes[a] { 0.5 * h } else { h };
        }
        w
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.weight(i)).collect()
    }

    /// Trapezoidal time weight of frame `k`.
    pub fn time_weight(&self, k: usize) -> f64 {
        let dt = self.dt();
        if k == 0 || k == self.n_steps {
            0.5 * dt
        } else {
            dt
        }
    }

    /// Cell counts per axis (1 for unused axes).
    pub fn cells3(&self) -> [usize; 3] {
        let mut c = [1usize; 3];
        for (a, ca) in c.iter_mut().enumerate().take(self.dim) {
            *ca = self.nodes[a] - 1;
        }
        c
    }

    pub fn n_cells(&self) -> usize {
        self.cells3().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    /// Node indices of the 2^dim corners of `cell`; corner `c` sits at offset
    /// bit `a` of `c` along axis `a`.
    pub fn cell_corners(&self, cell: usize) -> Vec<usize> {
        let cells = self.cells3();
        let base = [
            cell % cells[0],
            (cell / cells[0]) % cells[1],
            cell / (cells[0] * cells[1]),
        ];
        (0..1usize << self.dim)
            .map(|c| {
                let mut ijk = base;
                for (a, v) in ijk.iter_mut().enumerate().take(self.dim) {
                    *v += (c >> a) & 1;
                }
                self.node_index(ijk)
            })
            .collect()
    }

    pub fn same_space(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.nodes == other.nodes && self.lengths == other.lengths
    }
}

/// Nodal values on a grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::validation(
                "field",
                format!("{} values for {} nodes", values.len(), grid.n_nodes()),
            ));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.n_nodes()).map(|i| f(grid.node_coords(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        crate::exec::axpy(alpha, &other.values, &mut self.values);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One field per time level `0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries {
    grid: Grid,
    frames: Vec<ScalarField>,
}

impl FieldSeries {
    pub fn new(grid: Grid, frames: Vec<ScalarField>) -> Result<Self> {
        if frames.len() != grid.n_frames() {
            return Err(Error::validation(
                "series",
                format!("{} frames for {} time levels", frames.len(), grid.n_frames()),
            ));
        }
        if frames.iter().any(|f| !f.grid.same_space(&grid)) {
            return Err(Error::validation("series", "frames live on different grids"));
        }
        Ok(FieldSeries { grid, frames })
    }

    pub fn zeros(grid: Grid) -> Self {
        FieldSeries {
            grid,
            frames: vec![ScalarField::zeros(grid); grid.n_frames()],
        }
    }

    /// Samples `f(x, t)` at every node and time level.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3], f64) -> f64) -> Self {
        let frames = (0..grid.n_frames())
            .map(|k| {
                let t = grid.time(k);
                ScalarField::from_fn(grid, |x| f(x, t))
            })
            .collect();
        FieldSeries { grid, frames }
    }

    /// Repeats one spatial profile at every time level, scaled by `g(t)`.
    pub fn separable(profile: &ScalarField, g: impl Fn(f64) -> f64) -> Self {
        let grid = *profile.grid();
        let frames = (0..grid.n_frames())
            .map(|k| profile.scaled(g(grid.time(k))))
            .collect();
        FieldSeries { grid, frames }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn frame(&self, k: usize) -> &ScalarField {
        &self.frames[k]
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut ScalarField {
        &mut self.frames[k]
    }

    pub fn frames(&self) -> &[ScalarField] {
        &self.frames
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn zip_map(&self, other: &FieldSeries, f: impl Fn(f64, f64) -> f64 + Copy) -> Self {
        FieldSeries {
            grid: self.grid,
            frames: self
                .frames
                .iter()
                .zip(&other.frames)
                .map(|(a, b)| a.zip_map(b, f))
                .collect(),
        }
    }

    pub fn map_frames(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        FieldSeries {
            grid: self.grid,
            frames: self.frames.iter().map(f).collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map_frames(|fr| fr.scaled(alpha))
    }

    pub fn sub(&self, other: &FieldSeries) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add_scaled(&self, alpha: f64, other: &FieldSeries) -> Self {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    /// Space-time inner product with lumped space and trapezoidal time weights.
    pub fn inner(&self, other: &FieldSeries) -> f64 {
        let g = &self.grid;
        (0..self.n_frames())
            .map(|k| {
                let a = self.frames[k].values();
                let b = other.frames[k].values();
                g.time_weight(k) * (0..a.len()).map(|i| g.weight(i) * a[i] * b[i]).sum::<f64>()
            })
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.frames.iter().all(ScalarField::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    pub fn into_frames(self) -> Vec<ScalarField> {
        self.frames
    }
}

/// Named collection of non-negative norm values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    entries: BTreeMap<String, f64>,
}

impl NormReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, value: f64) -> Result<()> {
        let label = label.into();
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::validation(
                "norm report",
                format!("{label} = {value} is not a finite non-negative number"),
            ));
        }
        self.entries.insert(label, value);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.get(label).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Flat JSON object, keys sorted.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("finite floats always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: BTreeMap<String, f64> =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let mut r = NormReport::new();
        for (k, v) in entries {
            r.insert(k, v)?;
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(&[1], &[1.0], 1.0, 1).is_err());
        assert!(Grid::new(&[3], &[0.0], 1.0, 1).is_err());
        assert!(Grid::new(&[3], &[1.0], 0.0, 1).is_err());
        assert!(Grid::new(&[3], &[1.0], 1.0, 0).is_err());
        assert!(Grid::new(&[3, 3, 3, 3], &[1.0; 4], 1.0, 1).is_err());
        assert!(Grid::new(&[3, 3], &[1.0], 1.0, 1).is_err());
    }

    #[test]
    fn weights_sum_to_measure() {
        for g in [
            Grid::new(&[5], &[2.5], 1.0, 1).unwrap(),
            Grid::new(&[4, 7], &[1.0, 3.0], 1.0, 1).unwrap(),
            Grid::new(&[3, 4, 5], &[0.5, 2.0, 1.5], 1.0, 1).unwrap(),
        ] {
            let s: f64 = g.weights().iter().sum();
            assert!((s - g.measure()).abs() < 1e-14 * g.measure());
        }
    }

    #[test]
    fn index_roundtrip_and_corners() {
        let g = Grid::new(&[4, 3, 2], &[1.0, 1.0, 1.0], 1.0, 1).unwrap();
        for i in 0..g.n_nodes() {
            assert_eq!(g.node_index(g.node_ijk(i)), i);
        }
        assert_eq!(g.n_cells(), 3 * 2);
        let c = g.cell_corners(0);
        assert_eq!(c, vec![0, 1, 4, 5, 12, 13, 16, 17]);
    }

    #[test]
    fn time_weights_sum_to_horizon() {
        let g = Grid::unit_interval(3, 2.0, 7).unwrap();
        let s: f64 = (0..g.n_frames()).map(|k| g.time_weight(k)).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn series_requires_frame_count() {
        let g = Grid::unit_interval(3, 1.0, 2).unwrap();
        assert!(FieldSeries::new(g, vec![ScalarField::zeros(g); 2]).is_err());
        assert!(FieldSeries::new(g, vec![ScalarField::zeros(g); 3]).is_ok());
        assert!(ScalarField::new(g, vec![0.0; 4]).is_err());
    }

    #[test]
    fn report_rejects_negative_and_roundtrips() {
        let mut r = NormReport::new();
        assert!(r.insert("x", -1.0).is_err());
        assert!(r.insert("x", f64::NAN).is_err());
        r.insert("phi_tr.C0_L2", 1.5).unwrap();
        let back = NormReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
