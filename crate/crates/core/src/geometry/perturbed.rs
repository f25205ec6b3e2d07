use super::{check_in_square, Chart, OscillationProfile};
use crate::error::{Error, Result};
use crate::scalar::{Point, Real};

/// Fixed chart composed with the perturbation map `T_eps`, so that the line
/// `s = 0` is carried onto the oscillating boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedChart<T> {
    pub base: Chart<T>,
    pub profile: OscillationProfile<T>,
    pub eps: T,
}

impl<T: Real> PerturbedChart<T> {
    pub fn new(base: Chart<T>, profile: OscillationProfile<T>, eps: T) -> Result<Self> {
        if !(eps > T::zero()) {
            return Err(Error::Domain(format!("eps = {eps} must be positive")));
        }
        profile.validate()?;
        base.validate()?;
        if profile.rho_eps_max(eps) >= T::one() {
            return Err(Error::Geometry(format!(
                "rho_eps reaches {} >= 1 at eps = {eps}; the strip leaves the chart",
                profile.rho_eps_max(eps)
            )));
        }
        Ok(Self { base, profile, eps })
    }

    pub fn rho(&self, x: T) -> T {
        self.profile.rho_eps_unchecked(self.eps, x)
    }

    pub fn rho_prime(&self, x: T) -> T {
        self.profile.rho_eps_prime(self.eps, x)
    }

    /// `T_eps(x', s)`, piecewise in `s` with the branch switching at `s = 0`.
    pub fn perturb(&self, p: Point<T>) -> Point<T> {
        let r = self.rho(p[0]);
        let s = p[1];
        if s < T::zero() {
            [p[0], s + s * r + r]
        } else {
            [p[0], s - s * r + r]
        }
    }

    /// Inverse of `T_eps` on its image.
    pub fn unperturb(&self, q: Point<T>) -> Point<T> {
        let r = self.rho(q[0]);
        let t = q[1];
        if t < r {
            [q[0], (t - r) / (T::one() + r)]
        } else {
            [q[0], (t - r) / (T::one() - r)]
        }
    }

    /// `Phi_eps = Phi o T_eps`.
    pub fn forward(&self, p: Point<T>) -> Result<Point<T>> {
        check_in_square(p)?;
        Ok(self.base.forward_unchecked(self.perturb(p)))
    }

    /// Oscillating boundary trace `psi_eps(x') = Phi(x', rho_eps(x'))`.
    pub fn trace(&self, x: T) -> Result<Point<T>> {
        self.base.forward([x, self.rho(x)])
    }

    pub fn trace_tangent(&self, x: T) -> Point<T> {
        let p = [x, self.rho(x)];
        let (dx, ds) = self.base.derivative(p);
        let rp = self.rho_prime(x);
        [dx[0] + rp * ds[0], dx[1] + rp * ds[1]]
    }

    /// Whether the chart point `(x', s)` lies in the strip `0 <= s < rho_eps(x')`.
    pub fn in_strip(&self, p: Point<T>) -> bool {
        p[1] >= T::zero() && p[1] < self.rho(p[0])
    }
}
