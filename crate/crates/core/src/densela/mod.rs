//! Dense linear-algebra kernels used by the estimator.

mod cg;
mod cholesky;
mod eigen;
mod power;
mod simplex;

pub use cg::{conjugate_gradient, CgSolution, DenseOperator, FnOperator, LinearOperator};
pub use cholesky::{cholesky_solve, Cholesky};
pub use eigen::{sym_eigen, EigenDecomp, JACOBI_MAX_SWEEPS, JACOBI_OFF_TOL};
pub use power::operator_norm;
pub use simplex::{simplex_lp, LpSolution};
