//! Linear, nonlinear and eigenvalue solvers.

mod cg;
mod cholesky;
mod eigen;
mod nonlinear;

pub use cg::{
    pcg, solve_spd, CgOptions, Identity, IncompleteCholesky, Jacobi, LinearMethod, Preconditioner, PreconditionerKind,
    SolveReport, SpdSolver,
};
pub use cholesky::{coordinate_dissection, nested_dissection, SparseCholesky};
pub use eigen::{dense_generalized, largest_generalized, pair_residual, solve_eigen, EigenOptions, EigenPairs};
pub use nonlinear::{solve_nonlinear, NonlinearOptions};
