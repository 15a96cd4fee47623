//! Sparse operators of the spatial bilinear forms and the linear solvers.

mod cg;
mod operators;
mod sparse;
mod stiffness;

pub use cg::{cg_solve, CgOptions, CgOutcome};
pub use operators::{
    bidomain_elliptic_solve, check_compatibility, elliptic_solve_load, monodomain_form,
    reduced_rhs_s, ReducedBidomainOperator, SolverSettings, SystemOperators,
};
pub use sparse::{LinearOperator, SparseOperator};
pub use stiffness::{assemble_stiffness, ellipticity_check};
