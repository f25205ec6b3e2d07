//! Effective boundary coefficients `beta` (concentrated strip density) and
//! `gamma` (relative surface measure of the oscillating boundary), from cell
//! averages and from a parametrization-free weak-limit estimator.

use crate::error::{Error, Result};
use crate::geometry::{jacobian_boundary, Chart, OscillationProfile, PerturbedChart};
use crate::quadrature::{composite_points, merge_breaks, GaussLegendre};
use crate::scalar::{norm, Real};

/// Values below this are treated as a vanishing boundary Jacobian.
const SINGULAR_JACOBIAN: f64 = 1e-12;

/// `M_Y(rho)`: mean of the profile over one period cell.
pub fn cell_average<T: Real>(profile: &OscillationProfile<T>) -> T {
    cell_mean(profile, |z| profile.rho(z))
}

/// Mean over one period cell of `g(z)`, with at least `profile.resolution`
/// Gauss points per period placed inside the profile's smooth pieces.
fn cell_mean<T: Real, F: Fn(T) -> T>(profile: &OscillationProfile<T>, g: F) -> T {
    let l = profile.period;
    let mut breaks: Vec<T> = profile.cell_breakpoints();
    breaks.push(l);
    let rule = GaussLegendre::new(6);
    let pieces = breaks.len() - 1;
    let sub = profile.resolution.max(1).div_ceil(6 * pieces);
    let pts = composite_points(&rule, &breaks, sub);
    pts.iter().fold(T::zero(), |s, &(z, w)| s + w * g(z)) / l
}

pub(crate) fn boundary_jacobian<T: Real>(chart: &Chart<T>, x: T) -> Result<T> {
    let j = jacobian_boundary(chart, x)?;
    if !(j > T::lit(SINGULAR_JACOBIAN)) {
        return Err(Error::SingularParametrization { at: x.to_f64_lossy() });
    }
    Ok(j)
}

/// `beta(x') = phi(x') M_Y(rho) J_2 Phi(x', 0) / J_1 psi(x')`.
pub fn beta_closed_form<T: Real>(chart: &Chart<T>, profile: &OscillationProfile<T>, x: T) -> Result<T> {
    let beta_tilde = profile.modulation.value(x) * cell_average(profile);
    beta_from_density(chart, x, beta_tilde)
}

fn beta_from_density<T: Real>(chart: &Chart<T>, x: T, beta_tilde: T) -> Result<T> {
    let j2 = chart.jacobian_volume([x, T::zero()])?;
    Ok(beta_tilde * j2 / boundary_jacobian(chart, x)?)
}

/// `gamma(x') = gamma~(x') / J_1 psi(x')`, where `gamma~` is the cell average
/// of the length of the limiting tangent `d_x Phi(x', 0) + phi(x') rho'(z) d_s Phi(x', 0)`.
/// Only available for profiles oscillating on the scale `eps` (`alpha = 1`).
pub fn gamma_closed_form<T: Real>(chart: &Chart<T>, profile: &OscillationProfile<T>, x: T) -> Result<T> {
    if profile.alpha != T::one() {
        return Err(Error::ClosedFormUnavailable(format!(
            "gamma has no cell formula for alpha = {} (only alpha = 1)",
            profile.alpha
        )));
    }
    let (dx, ds) = chart.derivative([x, T::zero()]);
    let phi = profile.modulation.value(x);
    let tilde = cell_mean(profile, |z| {
        let r = phi * profile.rho_prime(z);
        norm([dx[0] + r * ds[0], dx[1] + r * ds[1]])
    });
    Ok(tilde / boundary_jacobian(chart, x)?)
}

/// An `eps`-indexed density on a parameter interval, with the points where it
/// fails to be smooth.
pub struct Family<'a, T> {
    value: Box<dyn Fn(T, T) -> Result<T> + Send + Sync + 'a>,
    breaks: Box<dyn Fn(T, T, T) -> Vec<T> + Send + Sync + 'a>,
}

impl<'a, T: Real> Family<'a, T> {
    /// `value(eps, x)` and `breaks(eps, a, b)` (sorted, including `a` and `b`).
    pub fn new(
        value: impl Fn(T, T) -> Result<T> + Send + Sync + 'a,
        breaks: impl Fn(T, T, T) -> Vec<T> + Send + Sync + 'a,
    ) -> Self {
        Self {
            value: Box::new(value),
            breaks: Box::new(breaks),
        }
    }

    /// A smooth family; quadrature panels follow the scale `scale(eps)`.
    pub fn smooth(
        value: impl Fn(T, T) -> Result<T> + Send + Sync + 'a,
        scale: impl Fn(T) -> T + Send + Sync + 'a,
    ) -> Self {
        Self::new(value, move |eps, a, b| {
            let n = ((b - a) / scale(eps)).ceil().to_usize().unwrap_or(1).max(1);
            (0..=n)
                .map(|k| {
                    if k == n {
                        b
                    } else {
                        a + (b - a) * T::from_count(k) / T::from_count(n)
                    }
                })
                .collect()
        })
    }

    /// `J_1 psi_eps(x')`, the length density of the oscillating boundary.
    pub fn boundary_length(chart: &'a PerturbedChartFactory<T>) -> Self {
        Self::new(
            move |eps, x| jacobian_boundary(&chart.at(eps)?, x),
            move |eps, a, b| chart.profile.breakpoints_in(eps, a, b),
        )
    }

    /// `(1/eps) int_0^{rho_eps(x')} J_2 Phi(x', s) ds`, the strip area density.
    pub fn strip_density(chart: &'a PerturbedChartFactory<T>) -> Self {
        let inner = GaussLegendre::<T>::new(4);
        Self::new(
            move |eps, x| {
                let r = chart.profile.rho_eps(eps, x)?;
                let base = &chart.base;
                Ok(inner.integrate(T::zero(), r, |s| base.jacobian_volume_unchecked([x, s])) / eps)
            },
            move |eps, a, b| chart.profile.breakpoints_in(eps, a, b),
        )
    }

    pub fn value(&self, eps: T, x: T) -> Result<T> {
        (self.value)(eps, x)
    }
}

/// Chart and profile from which perturbed charts are built for any `eps`.
#[derive(Clone, Debug)]
pub struct PerturbedChartFactory<T> {
    pub base: Chart<T>,
    pub profile: OscillationProfile<T>,
}

impl<T: Real> PerturbedChartFactory<T> {
    pub fn new(base: Chart<T>, profile: OscillationProfile<T>) -> Self {
        Self { base, profile }
    }

    pub fn at(&self, eps: T) -> Result<PerturbedChart<T>> {
        PerturbedChart::new(self.base.clone(), self.profile.clone(), eps)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorOptions<T> {
    /// Number of hat functions (nodes of the uniform partition, ends included).
    pub hats: usize,
    /// Largest acceptable extrapolation residual.
    pub tolerance: T,
    /// Strictly decreasing `eps` values.
    pub ladder: Vec<T>,
    pub interval: (T, T),
}

impl<T: Real> Default for EstimatorOptions<T> {
    fn default() -> Self {
        Self {
            hats: 32,
            tolerance: T::lit(1e-3),
            ladder: (0..10).map(|k| T::lit(0.2 / f64::powi(2.0, k))).collect(),
            interval: (-T::one(), T::one()),
        }
    }
}

impl<T: Real> EstimatorOptions<T> {
    /// Default options with the ladder extended to `levels` halvings of `0.2`.
    pub fn with_levels(levels: usize) -> Self {
        Self {
            ladder: (0..levels).map(|k| T::lit(0.2 / f64::powi(2.0, k as i32))).collect(),
            ..Self::default()
        }
    }

    /// Ladder deep enough for stretched parametrizations, whose cells in the
    /// new coordinate are wider by the inverse stretching factor.
    pub fn deep() -> Self {
        Self::with_levels(13)
    }
}

/// Piecewise-linear density recovered from hat-function moments.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakLimit<T> {
    pub nodes: Vec<T>,
    pub density: Vec<T>,
    /// Extrapolated moments `m_0(v_k)`.
    pub moments: Vec<T>,
    /// Per-hat extrapolation residuals.
    pub residuals: Vec<T>,
    /// Moments per ladder value (rows follow the ladder).
    pub history: Vec<Vec<T>>,
}

impl<T: Real> WeakLimit<T> {
    /// Evaluates the density (clamped to the interval).
    pub fn eval(&self, x: T) -> T {
        let n = self.nodes.len();
        let (a, b) = (self.nodes[0], self.nodes[n - 1]);
        let x = x.max(a).min(b);
        let step = (b - a) / T::from_count(n - 1);
        let k = ((x - a) / step).floor().to_usize().unwrap_or(0).min(n - 2);
        let t = (x - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        self.density[k] * (T::one() - t) + self.density[k + 1] * t
    }

    pub fn worst_residual(&self) -> T {
        self.residuals.iter().fold(T::zero(), |m, &r| m.max(r))
    }
}

/// Richardson extrapolation of the last three values with the order read off
/// the ratio of successive differences. Returns `(limit, residual)`.
pub fn extrapolate<T: Real>(values: &[T]) -> (T, T) {
    let n = values.len();
    match n {
        0 => return (T::zero(), T::infinity()),
        1 => return (values[0], T::infinity()),
        2 => return (values[1], (values[1] - values[0]).abs()),
        _ => {}
    }
    let (m1, m2, m3) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (m2 - m1, m3 - m2);
    let scale = m3.abs().max(T::one());
    if d2.abs() <= T::epsilon() * T::lit(64.0) * scale {
        return (m3, d2.abs());
    }
    let r = d1 / d2;
    // ratios between 2^0.5 and 2^6 correspond to plausible convergence orders
    if r > T::lit(2f64.sqrt()) && r < T::lit(64.0) {
        let limit = m3 + d2 / (r - T::one());
        (limit, (limit - m3).abs().max(d2.abs() / r))
    } else {
        (m3, d2.abs().max(d1.abs()))
    }
}

/// Estimates the weak limit of `family` as `eps -> 0` against a bank of hat
/// functions and returns the piecewise-linear density with the same moments.
pub fn weak_limit_estimate<T: Real>(family: &Family<'_, T>, opts: &EstimatorOptions<T>) -> Result<WeakLimit<T>> {
    let n = opts.hats;
    if n < 2 {
        return Err(Error::Domain("the hat bank needs at least two functions".into()));
    }
    if opts.ladder.len() < 3 || opts.ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain(
            "estimator ladder must hold at least three strictly decreasing values".into(),
        ));
    }
    let (a, b) = opts.interval;
    let step = (b - a) / T::from_count(n - 1);
    let nodes: Vec<T> = (0..n)
        .map(|k| if k == n - 1 { b } else { a + step * T::from_count(k) })
        .collect();
    let rule = GaussLegendre::new(6);
    let mut history = Vec::with_capacity(opts.ladder.len());
    for &eps in &opts.ladder {
        let breaks = merge_breaks(&(family.breaks)(eps, a, b), &nodes);
        let mut m = vec![T::zero(); n];
        for (x, w) in composite_points(&rule, &breaks, 4) {
            let v = family.value(eps, x)? * w;
            let k = ((x - a) / step).floor().to_usize().unwrap_or(0).min(n - 2);
            let t = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
            m[k] = m[k] + v * (T::one() - t);
            m[k + 1] = m[k + 1] + v * t;
        }
        history.push(m);
    }
    let mut moments = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for k in 0..n {
        let seq: Vec<T> = history.iter().map(|m| m[k]).collect();
        let (lim, res) = extrapolate(&seq);
        moments.push(lim);
        residuals.push(res);
    }
    let worst = residuals.iter().fold(T::zero(), |m, &r| m.max(r));
    if !(worst <= opts.tolerance) {
        return Err(Error::Estimation {
            worst: worst.to_f64_lossy(),
            tolerance: opts.tolerance.to_f64_lossy(),
            residuals: residuals.iter().map(|r| r.to_f64_lossy()).collect(),
        });
    }
    let density = solve_hat_gram(step, &moments);
    Ok(WeakLimit {
        nodes,
        density,
        moments,
        residuals,
        history,
    })
}

/// Solves the P1 Gram system on a uniform partition (tridiagonal, Thomas algorithm).
fn solve_hat_gram<T: Real>(step: T, rhs: &[T]) -> Vec<T> {
    let n = rhs.len();
    let six = T::lit(6.0);
    let off = step / six;
    let diag = |k: usize| {
        if k == 0 || k == n - 1 {
            step * T::lit(2.0) / six
        } else {
            step * T::lit(4.0) / six
        }
    };
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = off / diag(0);
    d[0] = rhs[0] / diag(0);
    for k in 1..n {
        let m = diag(k) - off * c[k - 1];
        c[k] = off / m;
        d[k] = (rhs[k] - off * d[k - 1]) / m;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    WeakLimitEstimate,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::WeakLimitEstimate => "weak_limit_estimate",
        }
    }
}

/// Pointwise evaluation of `beta` and `gamma` on the boundary parameter.
pub trait BoundaryCoefficients<T>: Send + Sync {
    fn beta(&self, x: T) -> Result<T>;
    fn gamma(&self, x: T) -> Result<T>;
}

// built once per scenario, so the size spread between variants is harmless
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
enum Source<T> {
    Closed {
        chart: Chart<T>,
        profile: OscillationProfile<T>,
    },
    Estimated {
        chart: Chart<T>,
        beta_tilde: WeakLimit<T>,
        gamma_tilde: WeakLimit<T>,
    },
    Constant {
        beta: T,
        gamma: T,
    },
}

/// The functions `beta` and `gamma` on the oscillating part of the boundary.
#[derive(Clone, Debug)]
pub struct EffectiveCoefficients<T> {
    source: Source<T>,
}

impl<T: Real> EffectiveCoefficients<T> {
    /// Cell-average formulas; `gamma` requires `alpha = 1`.
    pub fn closed_form(chart: &Chart<T>, profile: &OscillationProfile<T>) -> Result<Self> {
        profile.validate()?;
        if profile.alpha != T::one() {
            gamma_closed_form(chart, profile, T::zero())?;
        }
        Ok(Self {
            source: Source::Closed {
                chart: chart.clone(),
                profile: profile.clone(),
            },
        })
    }

    /// Weak-limit estimates of the strip density and the boundary length density.
    pub fn estimated(chart: &Chart<T>, profile: &OscillationProfile<T>, opts: &EstimatorOptions<T>) -> Result<Self> {
        let factory = PerturbedChartFactory::new(chart.clone(), profile.clone());
        let beta_tilde = weak_limit_estimate(&Family::strip_density(&factory), opts)?;
        let gamma_tilde = weak_limit_estimate(&Family::boundary_length(&factory), opts)?;
        Ok(Self {
            source: Source::Estimated {
                chart: chart.clone(),
                beta_tilde,
                gamma_tilde,
            },
        })
    }

    /// The best available form: cell averages when they exist, the estimator otherwise.
    pub fn for_profile(chart: &Chart<T>, profile: &OscillationProfile<T>, opts: &EstimatorOptions<T>) -> Result<Self> {
        match Self::closed_form(chart, profile) {
            Err(Error::ClosedFormUnavailable(_)) => Self::estimated(chart, profile, opts),
            other => other,
        }
    }

    pub fn constant(beta: T, gamma: T) -> Self {
        Self {
            source: Source::Constant { beta, gamma },
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self.source {
            Source::Estimated { .. } => Provenance::WeakLimitEstimate,
            _ => Provenance::ClosedForm,
        }
    }

    /// Residual table of the estimator, if this is an estimate.
    pub fn residuals(&self) -> Option<(&[T], &[T])> {
        match &self.source {
            Source::Estimated {
                beta_tilde,
                gamma_tilde,
                ..
            } => Some((&beta_tilde.residuals, &gamma_tilde.residuals)),
            _ => None,
        }
    }
}

impl<T: Real> BoundaryCoefficients<T> for EffectiveCoefficients<T> {
    fn beta(&self, x: T) -> Result<T> {
        match &self.source {
            Source::Closed { chart, profile } => beta_closed_form(chart, profile, x),
            Source::Estimated { chart, beta_tilde, .. } => Ok(beta_tilde.eval(x) / boundary_jacobian(chart, x)?),
            Source::Constant { beta, .. } => Ok(*beta),
        }
    }

    fn gamma(&self, x: T) -> Result<T> {
        match &self.source {
            Source::Closed { chart, profile } => gamma_closed_form(chart, profile, x),
            Source::Estimated { chart, gamma_tilde, .. } => Ok(gamma_tilde.eval(x) / boundary_jacobian(chart, x)?),
            Source::Constant { gamma, .. } => Ok(*gamma),
        }
    }
}

/// Outcome of comparing `beta` computed in two parametrizations of one boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport<T> {
    /// Matched parameter values `t` of the stretched parametrization.
    pub points: Vec<T>,
    pub beta_reference: Vec<T>,
    pub beta_stretched: Vec<T>,
    pub max_discrepancy: T,
    pub tolerance: T,
}

impl<T: Real> UniquenessReport<T> {
    pub fn passed(&self) -> bool {
        self.max_discrepancy < self.tolerance
    }
}

/// Lower end of the stretched interval `[delta, 1)`. Near `t = 0` the cube map
/// flattens, so one eps-cell spans many hats and the ladder would have to go deeper.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Computes `beta` by the estimator in the chart coordinate `x'` and in the
/// stretched coordinate `t` with `x' = t^3` on `[delta, 1)`, and compares the
/// two at matched boundary points.
pub fn check_beta_uniqueness<T: Real>(
    chart: &Chart<T>,
    profile: &OscillationProfile<T>,
    delta: T,
    opts: &EstimatorOptions<T>,
) -> Result<UniquenessReport<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let factory = PerturbedChartFactory::new(chart.clone(), profile.clone());
    let reference = weak_limit_estimate(&Family::strip_density(&factory), opts)?;
    // the length density of the fixed boundary goes through the same hat
    // projection, so beta is a ratio of two densities tested alike
    let fixed_length = |interval: (T, T), jac: &(dyn Fn(T) -> Result<T> + Sync)| {
        let fam = Family::new(|_, x| jac(x), |_, a, b| vec![a, b]);
        weak_limit_estimate(
            &fam,
            &EstimatorOptions {
                interval,
                ..opts.clone()
            },
        )
    };
    let length_reference = fixed_length(opts.interval, &|x| boundary_jacobian(chart, x))?;

    let three = T::lit(3.0);
    let cube = |t: T| t * t * t;
    let inner = GaussLegendre::<T>::new(4);
    // the same strip density written in t: pulled back and multiplied by dx'/dt
    let stretched_family = Family::new(
        |eps, t| {
            let x = cube(t);
            let r = profile.rho_eps(eps, x)?;
            let area = inner.integrate(T::zero(), r, |s| chart.jacobian_volume_unchecked([x, s]));
            Ok(area / eps * three * t * t)
        },
        |eps, a, b| {
            let xs = profile.breakpoints_in(eps, cube(a), cube(b));
            let mut ts: Vec<T> = xs.iter().map(|&x| x.cbrt()).collect();
            ts[0] = a;
            *ts.last_mut().unwrap() = b;
            ts
        },
    );
    let t_opts = EstimatorOptions {
        interval: (delta, T::one()),
        ..opts.clone()
    };
    let stretched = weak_limit_estimate(&stretched_family, &t_opts)?;
    let length_stretched = fixed_length(t_opts.interval, &|t| {
        Ok(boundary_jacobian(chart, cube(t))? * three * t * t)
    })?;

    let samples = 4 * opts.hats;
    let mut points = Vec::with_capacity(samples + 1);
    let mut beta_reference = Vec::with_capacity(samples + 1);
    let mut beta_stretched = Vec::with_capacity(samples + 1);
    let mut worst = T::zero();
    for k in 0..=samples {
        let t = delta + (T::one() - delta) * T::from_count(k) / T::from_count(samples);
        let x = cube(t);
        let b_ref = reference.eval(x) / length_reference.eval(x);
        let b_str = stretched.eval(t) / length_stretched.eval(t);
        worst = worst.max((b_ref - b_str).abs());
        points.push(t);
        beta_reference.push(b_ref);
        beta_stretched.push(b_str);
    }
    Ok(UniquenessReport {
        points,
        beta_reference,
        beta_stretched,
        max_discrepancy: worst,
        tolerance: T::lit(1e-3),
    })
}

/// One row of the coefficients table.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientRow<T> {
    pub x: T,
    pub beta_closed: Option<T>,
    pub beta_est: T,
    pub gamma_closed: Option<T>,
    pub gamma_est: T,
    /// Larger of the two estimator residuals at the nearest hat node.
    pub residual: T,
}

/// Closed forms (where they exist) next to the weak-limit estimates at
/// `points + 1` equispaced boundary parameters.
pub fn coefficient_table<T: Real>(
    chart: &Chart<T>,
    profile: &OscillationProfile<T>,
    opts: &EstimatorOptions<T>,
    points: usize,
) -> Result<Vec<CoefficientRow<T>>> {
    let est = EffectiveCoefficients::estimated(chart, profile, opts)?;
    let Source::Estimated {
        beta_tilde,
        gamma_tilde,
        ..
    } = &est.source
    else {
        unreachable!("estimated coefficients carry weak limits")
    };
    let (a, b) = opts.interval;
    let step = (b - a) / T::from_count(opts.hats - 1);
    let points = points.max(1);
    (0..=points)
        .map(|k| {
            let x = a + (b - a) * T::from_count(k) / T::from_count(points);
            let node = ((x - a) / step).round().to_usize().unwrap_or(0).min(opts.hats - 1);
            Ok(CoefficientRow {
                x,
                beta_closed: beta_closed_form(chart, profile, x).ok(),
                beta_est: est.beta(x)?,
                gamma_closed: gamma_closed_form(chart, profile, x).ok(),
                gamma_est: est.gamma(x)?,
                residual: beta_tilde.residuals[node].max(gamma_tilde.residuals[node]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Modulation, OscillationProfile};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn cell_average_examples() {
        let sine = OscillationProfile::sine(2.0, 1.0, 2.0);
        assert!(close(cell_average(&sine), 2.0, 1e-12));
        assert!(close(cell_average(&OscillationProfile::constant(1.7)), 1.7, 1e-12));
        // sawtooth of period 1 rising with slope 1 to 1/2, offset 0
        let saw = OscillationProfile::sawtooth(1.0, 0.0);
        assert!(close(cell_average(&saw), 0.25, 1e-12));
        let unit = OscillationProfile::constant(0.0);
        assert!(close(cell_mean(&unit, |z| z), 0.5, 1e-12));
    }

    #[test]
    fn beta_closed_form_examples() {
        let flat = Chart::FlatStrip;
        let c = OscillationProfile::constant(3.0);
        for x in [-0.9, 0.0, 0.4] {
            assert!(close(beta_closed_form(&flat, &c, x).unwrap(), 3.0, 1e-12));
        }
        let ann = Chart::annulus(2.0);
        let sine = OscillationProfile::sine(2.0, 1.0, 2.0);
        assert!(close(beta_closed_form(&ann, &sine, 0.3).unwrap(), 1.0, 1e-10));
        let zero = OscillationProfile::constant(0.0);
        assert_eq!(beta_closed_form(&flat, &zero, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn gamma_closed_form_examples() {
        let flat = Chart::FlatStrip;
        let saw = OscillationProfile::sawtooth(1.0, 0.5);
        assert!(close(gamma_closed_form(&flat, &saw, 0.2).unwrap(), 2f64.sqrt(), 1e-12));
        let c = OscillationProfile::constant(2.0);
        assert!(close(gamma_closed_form(&flat, &c, 0.2).unwrap(), 1.0, 1e-12));
        // (1/2) int_0^2 sqrt(1 + pi^2 cos^2(pi z)) dz, high-precision reference value
        let sine = OscillationProfile::sine(2.0, 1.0, 2.0);
        assert!(close(
            gamma_closed_form(&flat, &sine, 0.0).unwrap(),
            2.304_892_661_353_691,
            1e-9
        ));
        let slow = sine.clone().with_alpha(0.5);
        assert!(matches!(
            gamma_closed_form(&flat, &slow, 0.0),
            Err(Error::ClosedFormUnavailable(_))
        ));
    }

    #[test]
    fn annulus_gamma_keeps_angular_weight() {
        // cell average of sqrt(pi^2 r^2/4 + rho'(z)^2/4) over (0, 2) at r = 2,
        // divided by J_1 psi = pi; reference values from arbitrary-precision quadrature
        let ann = Chart::annulus(2.0);
        let sine = OscillationProfile::sine(2.0, 1.0, 2.0);
        let g = gamma_closed_form(&ann, &sine, 0.5).unwrap();
        assert!(close(g, 1.059_839_380_187_648, 1e-9), "gamma = {g}");
        assert!(g >= 1.0);
    }

    #[test]
    fn singular_parametrization_is_reported() {
        let degenerate = Chart::AnnulusSector {
            radius: crate::geometry::Radius::Constant(0.0),
        };
        let c = OscillationProfile::constant(1.0);
        assert!(matches!(
            beta_closed_form(&degenerate, &c, 0.0),
            Err(Error::SingularParametrization { .. }) | Err(Error::Domain(_)) | Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn extrapolation_recovers_second_order_limit() {
        let vals: Vec<f64> = (0..5).map(|k| 3.0 + 0.7 * 0.25f64.powi(k)).collect();
        let (lim, res) = extrapolate(&vals);
        assert!((lim - 3.0).abs() < 1e-12);
        assert!(res < 1e-2);
        let noisy = [1.0, 1.2, 0.9, 1.05];
        let (lim, res) = extrapolate(&noisy);
        assert_eq!(lim, 1.05);
        assert!(res >= 0.15);
    }

    #[test]
    fn oscillating_family_has_zero_limit() {
        let fam = Family::smooth(|eps: f64, x: f64| Ok((x / eps).sin()), |eps| eps);
        let opts = EstimatorOptions {
            ladder: (4..16).map(|k| 0.2 / 2f64.powi(k)).collect(),
            ..Default::default()
        };
        let w = weak_limit_estimate(&fam, &opts).unwrap();
        for &d in &w.density {
            assert!(d.abs() < 1e-2, "density {d}");
        }
    }

    #[test]
    fn constant_strip_density_is_recovered() {
        let f = PerturbedChartFactory::<f64>::new(Chart::FlatStrip, OscillationProfile::constant(1.5));
        let w = weak_limit_estimate(&Family::strip_density(&f), &EstimatorOptions::default()).unwrap();
        for &d in &w.density {
            assert!((d - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn sawtooth_length_density_is_sqrt2() {
        let f = PerturbedChartFactory::new(Chart::FlatStrip, OscillationProfile::sawtooth(1.0, 0.5));
        let w = weak_limit_estimate(&Family::boundary_length(&f), &EstimatorOptions::default()).unwrap();
        for &d in &w.density {
            assert!(close(d, 2f64.sqrt(), 1e-2), "density {d}");
        }
    }

    #[test]
    fn estimator_failure_carries_residuals() {
        // grows without bound as eps -> 0
        let fam = Family::smooth(|eps: f64, _x: f64| Ok(1.0 / eps), |_| 1.0);
        match weak_limit_estimate(&fam, &EstimatorOptions::default()) {
            Err(Error::Estimation { residuals, .. }) => assert_eq!(residuals.len(), 32),
            other => panic!("expected estimation failure, got {other:?}"),
        }
    }

    #[test]
    fn modulation_scales_beta() {
        let flat = Chart::FlatStrip;
        let p = OscillationProfile::sine(2.0, 1.0, 2.0).with_modulation(Modulation {
            at_zero: 1.0,
            slope: 0.5,
        });
        let b = beta_closed_form(&flat, &p, 0.5).unwrap();
        assert!(close(b, 1.25 * 2.0, 1e-10));
    }
}
