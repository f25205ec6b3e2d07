//! Named experiment geometries: chart, oscillation profile, nonlinearities,
//! `eps`-ladder and mesh-size policy.

use crate::error::{Error, Result};
use crate::geometry::{Chart, OscillationProfile, PerturbedChart, Radius};
use crate::nonlinearity::{Nonlinearity, Reaction};
use crate::scalar::Real;

/// Geometric ladder `eps_k = eps0 * 2^{-k}`, `k = 0..levels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder<T> {
    pub eps0: T,
    pub levels: usize,
}

impl<T: Real> Ladder<T> {
    pub fn values(&self) -> Vec<T> {
        (0..self.levels)
            .map(|k| self.eps0 / T::lit(2.0).powi(k as i32))
            .collect()
    }
}

impl<T: Real> Default for Ladder<T> {
    fn default() -> Self {
        Self {
            eps0: T::lit(0.2),
            levels: 7,
        }
    }
}

/// Mesh size policy: boundary size `h(eps) = min(h0, eps / 8)` and a coarser
/// interior size reached by 2:1 grading.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshPolicy<T> {
    pub h0: T,
    pub h_interior: T,
}

impl<T: Real> MeshPolicy<T> {
    pub fn h_for(&self, eps: T) -> T {
        if eps > T::zero() {
            self.h0.min(eps / T::lit(8.0))
        } else {
            self.h0
        }
    }
}

impl<T: Real> Default for MeshPolicy<T> {
    fn default() -> Self {
        Self {
            h0: T::lit(0.025),
            h_interior: T::lit(0.0625),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub name: String,
    pub chart: Chart<T>,
    pub profile: OscillationProfile<T>,
    pub nonlinearity: Nonlinearity<T>,
    pub ladder: Ladder<T>,
    pub mesh: MeshPolicy<T>,
}

/// Names of the shipped scenarios.
pub const SHIPPED: [&str; 5] = [
    "flat_constant",
    "flat_sawtooth",
    "flat_sine",
    "annulus_sine",
    "annulus_variable_r",
];

impl<T: Real> Scenario<T> {
    /// Looks up a shipped scenario by name.
    pub fn shipped(name: &str) -> Result<Self> {
        let one = T::one();
        let forced = Nonlinearity::new(Reaction::constant(one), Reaction::affine(one, T::zero()), T::lit(10.0));
        let sine = OscillationProfile::sine(T::lit(2.0), one, T::lit(2.0));
        let (chart, profile, nl) = match name {
            "flat_constant" => (
                Chart::FlatStrip,
                OscillationProfile::constant(T::lit(2.0)),
                Nonlinearity::zero(),
            ),
            "flat_sawtooth" => (Chart::FlatStrip, OscillationProfile::sawtooth(one, T::lit(0.5)), forced),
            "flat_sine" => (Chart::FlatStrip, sine, forced),
            "annulus_sine" => (Chart::annulus(T::lit(2.0)), sine, forced),
            "annulus_variable_r" => (
                Chart::AnnulusSector {
                    radius: Radius::Affine {
                        at_zero: T::lit(2.0),
                        slope: T::lit(0.3),
                    },
                },
                sine,
                forced,
            ),
            other => {
                return Err(Error::Domain(format!(
                    "unknown scenario `{other}` (expected one of {})",
                    SHIPPED.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            chart,
            profile,
            nonlinearity: nl,
            ladder: Ladder::default(),
            mesh: MeshPolicy::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.chart.validate()?;
        self.profile.validate()?;
        if !(self.ladder.eps0 > T::zero()) || self.ladder.levels == 0 {
            return Err(Error::Domain("ladder needs eps0 > 0 and at least one level".into()));
        }
        if !(self.mesh.h0 > T::zero() && self.mesh.h_interior > T::zero()) {
            return Err(Error::Domain("mesh sizes must be positive".into()));
        }
        if !(self.nonlinearity.cutoff > T::zero()) {
            return Err(Error::Domain("cut-off radius must be positive".into()));
        }
        // the strip must stay inside the chart for the largest eps
        self.perturbed(self.ladder.eps0)?;
        Ok(())
    }

    pub fn perturbed(&self, eps: T) -> Result<PerturbedChart<T>> {
        PerturbedChart::new(self.chart.clone(), self.profile.clone(), eps)
    }
}
