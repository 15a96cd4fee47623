use super::sparse::LinearOperator;
use crate::error::{Error, Result};
use crate::exec::{axpy, dot, norm2};

/// Options for [`cg_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `‖b − Ax‖ ≤ tol·‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10·n`.
    pub max_iter: Option<usize>,
    /// Solve on the complement of the constant vector (pure Neumann kernels).
    pub deflate_constants: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            max_iter: None,
            deflate_constants: false,
        }
    }
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        CgOptions {
            tol,
            ..Self::default()
        }
    }

    pub fn deflated(mut self) -> Self {
        self.deflate_constants = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Jacobi-preconditioned conjugate gradients.
///
/// With `deflate_constants` the right-hand side, the iterates and the
/// preconditioned residuals are kept orthogonal to the constant vector, and
/// the residual target refers to the projected right-hand side.
pub fn cg_solve(
    op: &impl LinearOperator,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<CgOutcome> {
    let n = op.dim();
    assert_eq!(rhs.len(), n, "right-hand side length");
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut b = rhs.to_vec();
    if opts.deflate_constants {
        remove_mean(&mut b);
    }
    let b_norm = norm2(&b);
    if !b_norm.is_finite() {
        return Err(Error::Solver {
            iterations: 0,
            residual: b_norm,
        });
    }
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precondition = |r: &[f64], z: &mut Vec<f64>| {
        z.clear();
        z.extend(r.iter().zip(&inv_diag).map(|(a, b)| a * b));
        if opts.deflate_constants {
            remove_mean(z);
        }
    };

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if opts.deflate_constants {
        remove_mean(&mut x);
    }
    let target = opts.tol * b_norm;
    let mut r = vec![0.0; n];
    let mut z = Vec::with_capacity(n);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    // Restarts from the true residual guard against drift of the recursive
    // residual at tight tolerances.
    for _restart in 0..4 {
        op.apply(&x, &mut ap)?;
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        if opts.deflate_constants {
            remove_mean(&mut r);
        }
        let mut r_norm = norm2(&r);
        if r_norm <= target {
            return Ok(CgOutcome {
                x,
                iterations,
                residual: r_norm / b_norm,
            });
        }
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            op.apply(&p, &mut ap)?;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) || !rz.is_finite() {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            r_norm = norm2(&r);
            if r_norm <= target {
                break;
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if iterations >= max_iter {
            break;
        }
    }
    op.apply(&x, &mut ap)?;
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    if opts.deflate_constants {
        remove_mean(&mut r);
    }
    let final_rel = norm2(&r) / b_norm;
    if final_rel <= opts.tol {
        return Ok(CgOutcome {
            x,
            iterations,
            residual: final_rel,
        });
    }
    Err(Error::Solver {
        iterations,
        residual: final_rel,
    })
}
