use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::grid::{Grid, TensorField};

/// `∫_cell ∂_a N_c ∂_b N_c'` for every axis pair and corner pair of one
/// multilinear cell, by two-point Gauss quadrature per axis (exact here).
/// Indexed `[a][b][c * corners + c']`.
struct ReferenceGradients {
    corners: usize,
    table: Vec<Vec<Vec<f64>>>,
}

impl ReferenceGradients {
    fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let corners = 1usize << d;
        let g = 0.5 / 3f64.sqrt();
        let pts = [0.5 - g, 0.5 + g];
        let h: Vec<f64> = (0..d).map(|a| grid.h(a)).collect();
        let vol = grid.cell_volume();
        let qw = vol / corners as f64;

        let shape = |c: usize, e: usize, xi: f64| if (c >> e) & 1 == 1 { xi } else { 1.0 - xi };
        // ∂_a N_c at quadrature point q (bit e of q selects pts[.] on axis e)
        let dshape = |c: usize, a: usize, q: usize| {
            let mut v = if (c >> a) & 1 == 1 { 1.0 } else { -1.0 } / h[a];
            for e in 0..d {
                if e != a {
                    v *= shape(c, e, pts[(q >> e) & 1]);
                }
            }
            v
        };

        let mut table = vec![vec![vec![0.0; corners * corners]; d]; d];
        for q in 0..corners {
            for (a, ta) in table.iter_mut().enumerate() {
                for (b, tab) in ta.iter_mut().enumerate() {
                    for c in 0..corners {
                        let da = dshape(c, a, q);
                        for c2 in 0..corners {
                            tab[c * corners + c2] += qw * da * dshape(c2, b, q);
                        }
                    }
                }
            }
        }
        ReferenceGradients { corners, table }
    }
}

/// Stiffness matrix of `∫ ∇uᵀ M ∇v` with multilinear elements and cellwise
/// constant `M`; the zero-flux boundary condition is natural.
pub fn assemble_stiffness(grid: &Grid, tensor: &TensorField) -> Result<SparseOperator> {
    if !grid.same_space(tensor.grid()) {
        return Err(Error::validation(
            "tensor field",
            "tensor lives on a different grid",
        ));
    }
    // Construction of a TensorField already rejects non-elliptic cells.
    ellipticity_check(tensor)?;
    let d = grid.dim();
    let rg = ReferenceGradients::new(grid);
    let nc = rg.corners;
    let mut trip = Vec::with_capacity(grid.n_cells() * nc * nc);
    let mut ke = vec![0.0; nc * nc];
    for cell in 0..grid.n_cells() {
        let m = tensor.cell(cell);
        ke.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..d {
            for b in 0..d {
                let mab = m[a][b];
                if mab == 0.0 {
                    continue;
                }
                for (k, v) in ke.iter_mut().enumerate() {
                    *v += mab * rg.table[a][b][k];
                }
            }
        }
        let nodes = grid.cell_corners(cell);
        for c in 0..nc {
            for c2 in 0..nc {
                trip.push((nodes[c], nodes[c2], ke[c * nc + c2]));
            }
        }
    }
    Ok(SparseOperator::from_triplets(grid.n_nodes(), trip))
}

/// Ellipticity bounds `(μ1, μ2)`: smallest and largest cell eigenvalue.
pub fn ellipticity_check(tensor: &TensorField) -> Result<(f64, f64)> {
    let d = tensor.grid().dim();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (c, m) in tensor.cells().iter().enumerate() {
        let (l, h) = crate::grid::cell_eigen_range(m, d);
        if !(l > 0.0) {
            return Err(Error::Ellipticity { cell: c, mu1: l });
        }
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField;

    fn energy(k: &SparseOperator, f: &ScalarField) -> f64 {
        k.quad_form(f.values(), f.values())
    }

    #[test]
    fn one_d_matches_three_point_stencil() {
        let g = Grid::unit_interval(5, 1.0, 1).unwrap();
        let k = assemble_stiffness(&g, &TensorField::isotropic(g, 1.0).unwrap()).unwrap();
        let h = 0.25;
        assert!((k.get(2, 2) - 2.0 / h).abs() < 1e-12);
        assert!((k.get(2, 1) + 1.0 / h).abs() < 1e-12);
        assert!((k.get(0, 0) - 1.0 / h).abs() < 1e-12);
    }

    #[test]
    fn linear_energy_is_exact() {
        let g = Grid::unit_interval(17, 1.0, 1).unwrap();
        let k = assemble_stiffness(&g, &TensorField::isotropic(g, 1.0).unwrap()).unwrap();
        assert!((energy(&k, &ScalarField::from_fn(g, |x| x[0])) - 1.0).abs() < 1e-12);

        let g2 = Grid::unit_square(9, 1.0, 1).unwrap();
        let k2 = assemble_stiffness(&g2, &TensorField::diagonal(g2, &[2.0, 2.0]).unwrap()).unwrap();
        assert!((energy(&k2, &ScalarField::from_fn(g2, |x| x[0])) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_energy_of_bilinear_function() {
        // u = x + 3y with M = [[2, 0.5], [0.5, 1]] on [0,1]x[0,2]:
        // ∇uᵀM∇u = 2 + 2·0.5·3 + 9 = 14, times area 2.
        let g = Grid::new(&[5, 7], &[1.0, 2.0], 1.0, 1).unwrap();
        let mut m = [[0.0; 3]; 3];
        m[0][0] = 2.0;
        m[0][1] = 0.5;
        m[1][0] = 0.5;
        m[1][1] = 1.0;
        let t = TensorField::uniform(g, m).unwrap();
        let k = assemble_stiffness(&g, &t).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0] + 3.0 * x[1]);
        assert!((energy(&k, &u) - 28.0).abs() < 1e-10);
        assert!(k.asymmetry() < 1e-14);
    }

    #[test]
    fn three_d_kernel_and_energy() {
        let g = Grid::new(&[3, 4, 3], &[1.0, 1.5, 0.5], 1.0, 1).unwrap();
        let k = assemble_stiffness(&g, &TensorField::diagonal(g, &[1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert!(k.row_sums().iter().all(|s| s.abs() < 1e-10));
        let u = ScalarField::from_fn(g, |x| x[2]);
        assert!((energy(&k, &u) - 3.0 * 0.75).abs() < 1e-12);
    }

    #[test]
    fn ellipticity_of_diagonal_tensor() {
        let g = Grid::unit_square(3, 1.0, 1).unwrap();
        let t = TensorField::diagonal(g, &[0.5, 3.0]).unwrap();
        let (lo, hi) = ellipticity_check(&t).unwrap();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
    }
}
