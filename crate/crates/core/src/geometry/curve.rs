use super::{Chart, PerturbedChart};
use crate::error::Result;
use crate::scalar::{norm, Point, Real};

/// Boundary parametrization `eta: (a, b) -> R^2`, differentiable almost everywhere.
pub trait BoundaryCurve<T: Real> {
    fn point(&self, x: T) -> Result<Point<T>>;
    /// Tangent `d eta / dx`; right derivative at kinks.
    fn tangent(&self, x: T) -> Result<Point<T>>;
}

/// `J_1 eta(x) = |d eta / dx|`.
pub fn jacobian_boundary<T: Real, C: BoundaryCurve<T> + ?Sized>(curve: &C, x: T) -> Result<T> {
    Ok(norm(curve.tangent(x)?))
}

impl<T: Real> BoundaryCurve<T> for Chart<T> {
    fn point(&self, x: T) -> Result<Point<T>> {
        self.trace(x)
    }

    fn tangent(&self, x: T) -> Result<Point<T>> {
        super::check_in_square([x, T::zero()])?;
        Ok(self.derivative([x, T::zero()]).0)
    }
}

impl<T: Real> BoundaryCurve<T> for PerturbedChart<T> {
    fn point(&self, x: T) -> Result<Point<T>> {
        self.trace(x)
    }

    fn tangent(&self, x: T) -> Result<Point<T>> {
        super::check_in_square([x, T::zero()])?;
        Ok(self.trace_tangent(x))
    }
}

/// Curve given by a pair of closures.
pub struct FnCurve<P, D> {
    pub point: P,
    pub tangent: D,
}

impl<T, P, D> BoundaryCurve<T> for FnCurve<P, D>
where
    T: Real,
    P: Fn(T) -> Point<T>,
    D: Fn(T) -> Point<T>,
{
    fn point(&self, x: T) -> Result<Point<T>> {
        Ok((self.point)(x))
    }

    fn tangent(&self, x: T) -> Result<Point<T>> {
        Ok((self.tangent)(x))
    }
}
