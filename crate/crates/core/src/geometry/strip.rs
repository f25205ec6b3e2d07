use super::PerturbedChart;
use crate::quadrature::{composite, GaussLegendre};
use crate::scalar::{Point, Real};

/// The strip `omega_eps = { Phi(x', s) : 0 <= s < rho_eps(x') }` between the
/// fixed and the oscillating boundary.
#[derive(Clone, Debug)]
pub struct StripRegion<T> {
    pub chart: PerturbedChart<T>,
}

impl<T: Real> StripRegion<T> {
    pub fn new(chart: PerturbedChart<T>) -> Self {
        Self { chart }
    }

    /// `int_{omega_eps} F` by profile-resolving quadrature in chart coordinates.
    pub fn integrate<F: Fn(Point<T>) -> T>(&self, f: F) -> T {
        self.integrate_over(-T::one(), T::one(), f)
    }

    /// Same, restricted to the chart columns `a <= x' <= b`.
    pub fn integrate_over<F: Fn(Point<T>) -> T>(&self, a: T, b: T, f: F) -> T {
        let outer = GaussLegendre::new(6);
        let inner = GaussLegendre::new(4);
        let breaks = self.chart.profile.breakpoints_in(self.chart.eps, a, b);
        let base = &self.chart.base;
        composite(&outer, &breaks, 4, |x| {
            let r = self.chart.rho(x);
            if r <= T::zero() {
                return T::zero();
            }
            inner.integrate(T::zero(), r, |s| {
                let p = [x, s];
                f(base.forward_unchecked(p)) * base.jacobian_volume_unchecked(p)
            })
        })
    }

    /// Area of the strip.
    pub fn area(&self) -> T {
        self.integrate(|_| T::one())
    }
}
