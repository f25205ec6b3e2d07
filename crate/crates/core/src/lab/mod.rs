//! Verification harness: the extension `E_eps` from the fixed domain to the
//! perturbed ones, norm distances across meshes, and the convergence studies.

mod extension;
mod fem_check;
mod report;
mod solution;
mod studies;

pub use extension::{extend, h1_distance, Distance, Extension};
pub use fem_check::{manufactured_solution_study, neumann_square_study, MmsLevel};
pub use report::{aitken, convergence_check, decreasing, Check, Column, ConvergenceReport};
pub use solution::{
    eigen_convergence_study, eigen_report, main_convergence_study, main_report, solve_ladder, Floors, LevelSolution,
    SolutionLadder,
};
pub use studies::{
    boundary_integral, boundary_measure_study, coefficient_study, concentrated_limit_study, trace_constant_study,
    CoefficientReport,
};

use crate::coefficients::{EstimatorOptions, DEFAULT_DELTA};
use crate::scalar::Real;
use crate::solvers::{EigenOptions, NonlinearOptions};

/// Knobs shared by the studies.
#[derive(Clone, Debug, PartialEq)]
pub struct LabOptions<T> {
    pub estimator: EstimatorOptions<T>,
    /// Estimator options for the parametrization check (a deeper ladder).
    pub uniqueness: EstimatorOptions<T>,
    /// Lower end of the stretched interval in the parametrization check.
    pub delta: T,
    pub nonlinear: NonlinearOptions<T>,
    pub eigen: EigenOptions<T>,
    /// Number of linearization eigenvalues compared.
    pub eigen_count: usize,
    /// Compute ladder points in parallel.
    pub parallel: bool,
    /// Run the h-refinement control at the smallest `eps`.
    pub control: bool,
}

impl<T: Real> Default for LabOptions<T> {
    fn default() -> Self {
        Self {
            estimator: EstimatorOptions::default(),
            uniqueness: EstimatorOptions::deep(),
            delta: T::lit(DEFAULT_DELTA),
            nonlinear: NonlinearOptions::default(),
            eigen: EigenOptions::default(),
            eigen_count: 5,
            parallel: false,
            control: true,
        }
    }
}
