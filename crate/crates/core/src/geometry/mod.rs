//! Chart machinery: fixed boundary-flattening charts, oscillation profiles,
//! the perturbation map `T_eps`, perturbed charts and the strip between the
//! fixed and the oscillating boundary.

mod chart;
mod curve;
mod perturbed;
mod profile;
mod strip;

pub use chart::{Chart, Radius};
pub use curve::{jacobian_boundary, BoundaryCurve, FnCurve};
pub use perturbed::PerturbedChart;
pub use profile::{Modulation, OscillationProfile, ProfileShape};
pub use strip::StripRegion;

use crate::error::{Error, Result};
use crate::scalar::{Point, Real};

/// Tolerance used when deciding whether a chart coordinate lies in the closed reference square.
pub(crate) fn square_slack<T: Real>() -> T {
    T::epsilon().sqrt() * T::lit(1e-2)
}

pub(crate) fn check_in_square<T: Real>(p: Point<T>) -> Result<()> {
    let lim = T::one() + square_slack::<T>();
    if !(p[0].abs() <= lim && p[1].abs() <= lim) {
        return Err(Error::Domain(format!(
            "chart coordinate ({}, {}) outside the reference square",
            p[0], p[1]
        )));
    }
    Ok(())
}
