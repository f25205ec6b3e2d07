use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shape of one period of the oscillation profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileShape {
    /// `rho(z) = offset + amplitude`.
    Constant,
    /// Triangle wave with slopes `+-amplitude`, vanishing at `z = 0` (mod `l`)
    /// and peaking at `z = l/2`.
    Sawtooth,
    /// `rho(z) = offset + amplitude * sin(2 pi z / l)`.
    Sine,
}

impl ProfileShape {
    pub fn name(self) -> &'static str {
        match self {
            ProfileShape::Constant => "constant",
            ProfileShape::Sawtooth => "sawtooth",
            ProfileShape::Sine => "sine",
        }
    }
}

/// Amplitude modulation `phi(x') = at_zero + slope * x'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulation<T> {
    pub at_zero: T,
    pub slope: T,
}

impl<T: Real> Modulation<T> {
    pub fn constant(v: T) -> Self {
        Self {
            at_zero: v,
            slope: T::zero(),
        }
    }

    pub fn value(&self, x: T) -> T {
        self.at_zero + self.slope * x
    }

    pub fn derivative(&self) -> T {
        self.slope
    }

    pub fn max_on_unit(&self) -> T {
        self.at_zero.abs() + self.slope.abs()
    }
}

/// Periodic profile `rho` with cell `Y = (0, l)`, modulation `phi` and exponent
/// `alpha`, generating `rho_eps(x') = eps * phi(x') * rho(x' / eps^alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationProfile<T> {
    pub shape: ProfileShape,
    pub period: T,
    pub alpha: T,
    pub amplitude: T,
    pub offset: T,
    pub modulation: Modulation<T>,
    /// Quadrature points per period used for cell averages.
    pub resolution: usize,
}

impl<T: Real> OscillationProfile<T> {
    pub fn constant(c: T) -> Self {
        Self {
            shape: ProfileShape::Constant,
            period: T::one(),
            alpha: T::one(),
            amplitude: c,
            offset: T::zero(),
            modulation: Modulation::constant(T::one()),
            resolution: 10_000,
        }
    }

    /// Slope `+-1` triangle wave of period `l`, shifted up by `offset`.
    pub fn sawtooth(period: T, offset: T) -> Self {
        Self {
            shape: ProfileShape::Sawtooth,
            period,
            amplitude: T::one(),
            offset,
            ..Self::constant(T::zero())
        }
    }

    /// `rho(z) = offset + amplitude * sin(2 pi z / l)`.
    pub fn sine(period: T, amplitude: T, offset: T) -> Self {
        Self {
            shape: ProfileShape::Sine,
            period,
            amplitude,
            offset,
            ..Self::constant(T::zero())
        }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_modulation(mut self, m: Modulation<T>) -> Self {
        self.modulation = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > T::zero()) {
            return Err(Error::Domain("profile period must be positive".into()));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::Domain(format!("exponent alpha = {} outside (0, 1]", self.alpha)));
        }
        if self.resolution == 0 {
            return Err(Error::Domain("profile resolution must be positive".into()));
        }
        if self.min_value() < T::zero() {
            return Err(Error::Domain("profile must be non-negative".into()));
        }
        if self.modulation.at_zero - self.modulation.slope.abs() < T::zero() {
            return Err(Error::Domain("modulation must be non-negative on Q1".into()));
        }
        Ok(())
    }

    /// `rho(z)`.
    pub fn rho(&self, z: T) -> T {
        match self.shape {
            ProfileShape::Constant => self.offset + self.amplitude,
            ProfileShape::Sawtooth => {
                let l = self.period;
                let w = z - l * (z / l).floor();
                let tri = if w < l * T::lit(0.5) { w } else { l - w };
                self.offset + self.amplitude * tri
            }
            ProfileShape::Sine => self.offset + self.amplitude * (T::TAU() * z / self.period).sin(),
        }
    }

    /// Right derivative `rho'(z)`.
    pub fn rho_prime(&self, z: T) -> T {
        match self.shape {
            ProfileShape::Constant => T::zero(),
            ProfileShape::Sawtooth => {
                let l = self.period;
                let w = z - l * (z / l).floor();
                if w < l * T::lit(0.5) {
                    self.amplitude
                } else {
                    -self.amplitude
                }
            }
            ProfileShape::Sine => {
                let k = T::TAU() / self.period;
                self.amplitude * k * (k * z).cos()
            }
        }
    }

    pub fn min_value(&self) -> T {
        match self.shape {
            ProfileShape::Constant => self.offset + self.amplitude,
            ProfileShape::Sawtooth => self.offset + (self.amplitude * self.period * T::lit(0.5)).min(T::zero()),
            ProfileShape::Sine => self.offset - self.amplitude.abs(),
        }
    }

    pub fn max_value(&self) -> T {
        match self.shape {
            ProfileShape::Constant => self.offset + self.amplitude,
            ProfileShape::Sawtooth => self.offset + (self.amplitude * self.period * T::lit(0.5)).max(T::zero()),
            ProfileShape::Sine => self.offset + self.amplitude.abs(),
        }
    }

    pub fn max_slope(&self) -> T {
        match self.shape {
            ProfileShape::Constant => T::zero(),
            ProfileShape::Sawtooth => self.amplitude.abs(),
            ProfileShape::Sine => self.amplitude.abs() * T::TAU() / self.period,
        }
    }

    /// Positions inside one cell `[0, l)` where the shape changes regime; used to
    /// align quadrature panels and mesh columns.
    pub fn cell_breakpoints(&self) -> Vec<T> {
        let l = self.period;
        match self.shape {
            ProfileShape::Constant => vec![T::zero()],
            ProfileShape::Sawtooth => vec![T::zero(), l * T::lit(0.5)],
            ProfileShape::Sine => (0..4).map(|k| l * T::from_count(k) * T::lit(0.25)).collect(),
        }
    }

    /// Positions inside one cell where `rho` is not differentiable.
    pub fn cell_kinks(&self) -> Vec<T> {
        match self.shape {
            ProfileShape::Sawtooth => self.cell_breakpoints(),
            _ => Vec::new(),
        }
    }

    /// Fast-variable scale `eps^alpha`.
    pub fn cell_scale(&self, eps: T) -> T {
        eps.powf(self.alpha)
    }

    /// `rho_eps(x') = eps * phi(x') * rho(x' / eps^alpha)`.
    pub fn rho_eps(&self, eps: T, x: T) -> Result<T> {
        if !(eps > T::zero()) {
            return Err(Error::Domain(format!("eps = {eps} must be positive")));
        }
        Ok(self.rho_eps_unchecked(eps, x))
    }

    pub(crate) fn rho_eps_unchecked(&self, eps: T, x: T) -> T {
        eps * self.modulation.value(x) * self.rho(x / self.cell_scale(eps))
    }

    /// Right derivative of `rho_eps` in `x'`.
    pub fn rho_eps_prime(&self, eps: T, x: T) -> T {
        let sc = self.cell_scale(eps);
        let z = x / sc;
        eps * self.modulation.derivative() * self.rho(z) + eps / sc * self.modulation.value(x) * self.rho_prime(z)
    }

    /// Upper bound of `rho_eps` on `Q1`.
    pub fn rho_eps_max(&self, eps: T) -> T {
        eps * self.modulation.max_on_unit() * self.max_value()
    }

    /// Upper bound of `|rho_eps'|` on `Q1`; bounded over `eps` for `alpha <= 1`.
    pub fn rho_eps_lipschitz_bound(&self, eps: T) -> T {
        let sc = self.cell_scale(eps);
        eps * self.modulation.derivative().abs() * self.max_value().abs()
            + eps / sc * self.modulation.max_on_unit() * self.max_slope()
    }

    /// All panel breakpoints of `rho_eps` inside `[a, b]`, plus the endpoints, sorted.
    pub fn breakpoints_in(&self, eps: T, a: T, b: T) -> Vec<T> {
        self.collect_cell_points(eps, a, b, &self.cell_breakpoints())
    }

    /// Kinks of `rho_eps` inside the open interval `(a, b)`, sorted.
    pub fn kinks_in(&self, eps: T, a: T, b: T) -> Vec<T> {
        let k = self.cell_kinks();
        if k.is_empty() {
            return Vec::new();
        }
        let mut pts = self.collect_cell_points(eps, a, b, &k);
        pts.retain(|&x| x > a && x < b);
        pts
    }

    fn collect_cell_points(&self, eps: T, a: T, b: T, cell: &[T]) -> Vec<T> {
        let sc = self.cell_scale(eps);
        let l = self.period * sc;
        let mut pts = vec![a, b];
        let first = (a / l).floor().to_i64().unwrap_or(0) - 1;
        let last = (b / l).ceil().to_i64().unwrap_or(0) + 1;
        for k in first..=last {
            let base = T::from_i64(k).unwrap() * l;
            for &c in cell {
                let x = base + c * sc;
                if x > a && x < b {
                    pts.push(x);
                }
            }
        }
        pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let tol = (b - a).abs() * T::epsilon() * T::lit(16.0);
        pts.dedup_by(|p, q| (*p - *q).abs() <= tol);
        let n = pts.len();
        pts[0] = a;
        pts[n - 1] = b;
        pts
    }
}
