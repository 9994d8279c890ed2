//! Dense convex subsolvers shared by every other module: a revised simplex
//! method with dual extraction and a Goldfarb–Idnani QP solver.

mod affine;
mod lp;
mod qp;

pub use affine::AffineSystem;
pub use lp::{solve_lp, LpSolution, LpStatus, DUAL_TOL, PIVOT_TOL, PRIMAL_TOL};
pub use qp::{
    project_polyhedron, smallest_eigenvalue, solve_qp, solve_qp_spd, QpSolution, QpStatus,
    SpdMatrix, SPD_TOL,
};
