//! Reaction terms `f(x, u)`, `g(x, u)` with the smooth cut-off outside `|u| <= R`.

use crate::scalar::{Point, Real};
use std::fmt;
use std::sync::Arc;

/// A scalar nonlinearity `(x, u) -> F(x, u)` with its first two `u`-derivatives.
pub trait ReactionFn<T: Real>: Send + Sync {
    fn value(&self, x: Point<T>, u: T) -> T;
    fn du(&self, x: Point<T>, u: T) -> T;
    fn duu(&self, x: Point<T>, u: T) -> T;
}

#[derive(Clone)]
pub enum Reaction<T> {
    /// `sum_k c_k u^k`, independent of `x`.
    Polynomial(Vec<T>),
    Custom(Arc<dyn ReactionFn<T>>),
}

impl<T: fmt::Debug> fmt::Debug for Reaction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Reaction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<T: Real> Reaction<T> {
    pub fn zero() -> Self {
        Reaction::Polynomial(Vec::new())
    }

    pub fn constant(c: T) -> Self {
        Reaction::Polynomial(vec![c])
    }

    /// `slope * u + offset`.
    pub fn affine(slope: T, offset: T) -> Self {
        Reaction::Polynomial(vec![offset, slope])
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Reaction::Polynomial(c) if c.iter().all(|v| *v == T::zero()))
    }

    pub fn value(&self, x: Point<T>, u: T) -> T {
        match self {
            Reaction::Polynomial(c) => c.iter().rev().fold(T::zero(), |acc, &ck| acc * u + ck),
            Reaction::Custom(r) => r.value(x, u),
        }
    }

    pub fn du(&self, x: Point<T>, u: T) -> T {
        match self {
            Reaction::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(T::zero(), |acc, (k, &ck)| acc * u + T::from_count(k) * ck),
            Reaction::Custom(r) => r.du(x, u),
        }
    }

    pub fn duu(&self, x: Point<T>, u: T) -> T {
        match self {
            Reaction::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(T::zero(), |acc, (k, &ck)| acc * u + T::from_count(k * (k - 1)) * ck),
            Reaction::Custom(r) => r.duu(x, u),
        }
    }
}

/// Saturating ramp: identity on `|t| <= 1`, `sign(t) (1 + tanh(|t| - 1))` outside.
/// `C^2` with `s, s', s''` bounded.
pub fn saturate<T: Real>(t: T) -> (T, T, T) {
    if t.abs() <= T::one() {
        return (t, T::one(), T::zero());
    }
    let sg = t.signum();
    let th = (t.abs() - T::one()).tanh();
    let sech2 = T::one() - th * th;
    (sg * (T::one() + th), sech2, sg * T::lit(-2.0) * th * sech2)
}

/// Pair of nonlinearities `(f, g)` entering the concentrated and boundary
/// terms, cut off smoothly outside `|u| <= cutoff`.
#[derive(Clone)]
pub struct Nonlinearity<T> {
    pub f: Reaction<T>,
    pub g: Reaction<T>,
    pub cutoff: T,
}

impl<T: fmt::Debug> fmt::Debug for Nonlinearity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("f", &self.f)
            .field("g", &self.g)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl<T: Real> Nonlinearity<T> {
    pub fn new(f: Reaction<T>, g: Reaction<T>, cutoff: T) -> Self {
        Self { f, g, cutoff }
    }

    pub fn zero() -> Self {
        Self::new(Reaction::zero(), Reaction::zero(), T::lit(10.0))
    }

    fn clamp(&self, u: T) -> (T, T, T) {
        let r = self.cutoff;
        let (s, ds, dds) = saturate(u / r);
        (r * s, ds, dds / r)
    }

    pub fn f(&self, x: Point<T>, u: T) -> T {
        self.f.value(x, self.clamp(u).0)
    }

    pub fn f_u(&self, x: Point<T>, u: T) -> T {
        let (v, d, _) = self.clamp(u);
        self.f.du(x, v) * d
    }

    pub fn f_uu(&self, x: Point<T>, u: T) -> T {
        let (v, d, dd) = self.clamp(u);
        self.f.duu(x, v) * d * d + self.f.du(x, v) * dd
    }

    pub fn g(&self, x: Point<T>, u: T) -> T {
        self.g.value(x, self.clamp(u).0)
    }

    pub fn g_u(&self, x: Point<T>, u: T) -> T {
        let (v, d, _) = self.clamp(u);
        self.g.du(x, v) * d
    }

    pub fn g_uu(&self, x: Point<T>, u: T) -> T {
        let (v, d, dd) = self.clamp(u);
        self.g.duu(x, v) * d * d + self.g.du(x, v) * dd
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_derivatives() {
        let r = Reaction::Polynomial(vec![-1.0, 0.0, 0.0, 2.0]); // 2u^3 - 1
        let x = [0.0, 0.0];
        assert_eq!(r.value(x, 2.0), 15.0);
        assert_eq!(r.du(x, 2.0), 24.0);
        assert_eq!(r.duu(x, 2.0), 24.0);
        assert!(Reaction::<f64>::zero().is_zero());
    }

    #[test]
    fn cutoff_leaves_bounded_region_untouched() {
        let nl = Nonlinearity::new(
            Reaction::Polynomial(vec![0.0, -1.0, 0.0, 1.0]),
            Reaction::affine(1.0, 0.0),
            2.0,
        );
        let x = [0.3, -0.2];
        for &u in &[-2.0, -0.5, 0.0, 1.9, 2.0] {
            assert_eq!(nl.f(x, u), u * u * u - u);
            assert_eq!(nl.g_u(x, u), 1.0);
        }
    }

    #[test]
    fn cutoff_is_bounded_and_c2() {
        let nl = Nonlinearity::new(Reaction::Polynomial(vec![0.0, 0.0, 0.0, 1.0]), Reaction::zero(), 1.5);
        let x = [0.0, 0.0];
        let mut bound = 0.0f64;
        for i in 0..4000 {
            let u = -100.0 + 0.05 * i as f64;
            bound = bound.max(nl.f(x, u).abs() + nl.f_u(x, u).abs() + nl.f_uu(x, u).abs());
        }
        // |u| <= 2R = 3 after clamping
        assert!(bound < 27.0 + 27.0 + 18.0 + 1.0, "bound {bound}");
        // continuity of value, first and second derivative across |u| = R
        for &u0 in &[1.5f64, -1.5] {
            let d = 1e-7;
            assert!((nl.f(x, u0 + d) - nl.f(x, u0 - d)).abs() < 1e-5);
            assert!((nl.f_u(x, u0 + d) - nl.f_u(x, u0 - d)).abs() < 1e-5);
            assert!((nl.f_uu(x, u0 + d) - nl.f_uu(x, u0 - d)).abs() < 1e-5);
        }
        // derivative consistent with finite differences outside the ramp
        let u = 2.3;
        let fd = (nl.f(x, u + 1e-6) - nl.f(x, u - 1e-6)) / 2e-6;
        assert!((fd - nl.f_u(x, u)).abs() < 1e-6);
        let fd2 = (nl.f_u(x, u + 1e-6) - nl.f_u(x, u - 1e-6)) / 2e-6;
        assert!((fd2 - nl.f_uu(x, u)).abs() < 1e-5);
    }
}
