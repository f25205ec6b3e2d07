//! Finite-element laboratory for elliptic problems whose reaction term is
//! concentrated in a thin oscillating strip next to the boundary.

// `!(x > 0)` is used on purpose: unlike `x <= 0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod coefficients;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod mesh;
pub mod nonlinearity;
pub mod quadrature;
pub mod scalar;
pub mod scenario;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::{Point, Real};

/// Double-precision instantiations of the generic types.
pub mod f64 {
    pub type Chart = crate::geometry::Chart<f64>;
    pub type OscillationProfile = crate::geometry::OscillationProfile<f64>;
    pub type Scenario = crate::scenario::Scenario<f64>;
    pub type Mesh = crate::mesh::Mesh<f64>;
    pub type Field = crate::assembly::Field<f64>;
    pub type SparseMatrix = crate::sparse::SparseMatrix<f64>;
    pub type EffectiveCoefficients = crate::coefficients::EffectiveCoefficients<f64>;
    pub type ConvergenceReport = crate::lab::ConvergenceReport<f64>;
    pub type LabOptions = crate::lab::LabOptions<f64>;
}
