use super::check_in_square;
use crate::error::{Error, Result};
use crate::scalar::{norm, Point, Real};

/// Radius function of an annulus-sector chart, `r(x')` for `x'` in `(-1, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Radius<T> {
    Constant(T),
    /// `r(x') = at_zero + slope * x'`.
    Affine {
        at_zero: T,
        slope: T,
    },
}

impl<T: Real> Radius<T> {
    pub fn value(&self, x: T) -> T {
        match *self {
            Radius::Constant(r) => r,
            Radius::Affine { at_zero, slope } => at_zero + slope * x,
        }
    }

    pub fn derivative(&self, _x: T) -> T {
        match *self {
            Radius::Constant(_) => T::zero(),
            Radius::Affine { slope, .. } => slope,
        }
    }

    fn min_on_unit(&self) -> T {
        match *self {
            Radius::Constant(r) => r,
            Radius::Affine { at_zero, slope } => at_zero - slope.abs(),
        }
    }
}

/// Lipschitz map from the reference square `Q2 = (-1,1)^2` into the plane whose
/// lower half `Q1 x (-1,0)` covers the domain and whose line `s = 0` traces the
/// fixed boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Chart<T> {
    /// Identity chart: the domain is the rectangle `(-1,1) x (-1,0)`.
    FlatStrip,
    /// `(x, y) -> ((r(x) + y/2) cos(pi x / 2), (r(x) + y/2) sin(pi x / 2))`.
    AnnulusSector { radius: Radius<T> },
}

impl<T: Real> Chart<T> {
    pub fn annulus(radius: T) -> Self {
        Chart::AnnulusSector {
            radius: Radius::Constant(radius),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Chart::AnnulusSector { radius } = self {
            // inner radius r - 1/2 must stay positive on the closed square
            if radius.min_on_unit() <= T::lit(0.5) {
                return Err(Error::Geometry("annulus radius must exceed 1/2 on [-1, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn forward(&self, p: Point<T>) -> Result<Point<T>> {
        check_in_square(p)?;
        Ok(self.forward_unchecked(p))
    }

    pub(crate) fn forward_unchecked(&self, p: Point<T>) -> Point<T> {
        match self {
            Chart::FlatStrip => p,
            Chart::AnnulusSector { radius } => {
                let big_r = radius.value(p[0]) + p[1] * T::lit(0.5);
                let th = T::FRAC_PI_2() * p[0];
                [big_r * th.cos(), big_r * th.sin()]
            }
        }
    }

    /// Columns `(d/dx', d/ds)` of the chart derivative.
    pub fn derivative(&self, p: Point<T>) -> (Point<T>, Point<T>) {
        match self {
            Chart::FlatStrip => ([T::one(), T::zero()], [T::zero(), T::one()]),
            Chart::AnnulusSector { radius } => {
                let half = T::lit(0.5);
                let big_r = radius.value(p[0]) + p[1] * half;
                let dr = radius.derivative(p[0]);
                let th = T::FRAC_PI_2() * p[0];
                let (s, c) = th.sin_cos();
                let w = T::FRAC_PI_2() * big_r;
                ([dr * c - w * s, dr * s + w * c], [half * c, half * s])
            }
        }
    }

    /// `|det DPhi(p)|`.
    pub fn jacobian_volume(&self, p: Point<T>) -> Result<T> {
        check_in_square(p)?;
        Ok(self.jacobian_volume_unchecked(p))
    }

    pub(crate) fn jacobian_volume_unchecked(&self, p: Point<T>) -> T {
        match self {
            Chart::FlatStrip => T::one(),
            Chart::AnnulusSector { radius } => T::FRAC_PI_4() * (radius.value(p[0]) + p[1] * T::lit(0.5)),
        }
    }

    /// Orientation sign of the chart (`+1` keeps counter-clockwise order).
    pub fn orientation(&self) -> T {
        match self {
            Chart::FlatStrip => T::one(),
            Chart::AnnulusSector { .. } => -T::one(),
        }
    }

    /// Fixed boundary trace `psi(x') = Phi(x', 0)`.
    pub fn trace(&self, x: T) -> Result<Point<T>> {
        self.forward([x, T::zero()])
    }

    /// Local scale factors `(|d Phi/dx'|, |d Phi/ds|)`.
    pub fn stretch(&self, p: Point<T>) -> (T, T) {
        let (dx, ds) = self.derivative(p);
        (norm(dx), norm(ds))
    }

    /// Pullback of a physical point to chart coordinates.
    pub fn inverse(&self, q: Point<T>) -> Result<Point<T>> {
        let p = match self {
            Chart::FlatStrip => q,
            Chart::AnnulusSector { radius } => {
                let th = q[1].atan2(q[0]);
                let x = th / T::FRAC_PI_2();
                let big_r = norm(q);
                [x, (big_r - radius.value(x)) * T::lit(2.0)]
            }
        };
        check_in_square(p)
            .map_err(|_| Error::Geometry(format!("pullback of ({}, {}) leaves the chart", q[0], q[1])))?;
        Ok(p)
    }

    /// Largest sampled difference quotient `|Phi(p) - Phi(q)| / |p - q|` on an
    /// `n x n` grid of the closed square.
    pub fn lipschitz_estimate(&self, n: usize) -> T {
        let n = n.max(2);
        let grid: Vec<Point<T>> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let a = T::lit(-1.0) + T::lit(2.0) * T::from_count(i) / T::from_count(n - 1);
                let b = T::lit(-1.0) + T::lit(2.0) * T::from_count(j) / T::from_count(n - 1);
                [a, b]
            })
            .collect();
        let mut best = T::zero();
        for (k, &p) in grid.iter().enumerate() {
            let fp = self.forward_unchecked(p);
            for &q in &grid[k + 1..] {
                let d = norm([p[0] - q[0], p[1] - q[1]]);
                let fq = self.forward_unchecked(q);
                let r = norm([fp[0] - fq[0], fp[1] - fq[1]]) / d;
                if r > best {
                    best = r;
                }
            }
        }
        best
    }
}
