use std::io::Write;

use rayon::prelude::*;

use super::report::{aitken, csv_error, decreasing, number, Check, Column, ConvergenceReport};
use super::LabOptions;
use crate::assembly::{assemble_h1_operator, boundary_mass, strip_mass};
use crate::coefficients::{
    boundary_jacobian, check_beta_uniqueness, coefficient_table, BoundaryCoefficients, CoefficientRow,
    EffectiveCoefficients, Provenance, UniquenessReport,
};
use crate::error::Result;
use crate::geometry::{Chart, StripRegion};
use crate::mesh::{boundary_polyline, mesh_domain};
use crate::quadrature::{composite, GaussLegendre};
use crate::scalar::{dist, Point, Real};
use crate::scenario::Scenario;
use crate::solvers::largest_generalized;

/// Runs `f` over the ladder, in parallel when asked; results keep ladder order.
pub(crate) fn over_ladder<T: Real, R: Send>(
    eps: &[T],
    parallel: bool,
    f: impl Fn(T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    if parallel {
        eps.par_iter().map(|&e| f(e)).collect()
    } else {
        eps.iter().map(|&e| f(e)).collect()
    }
}

/// `int_{-1}^{1} f(x') J_1 psi(x') dx'`, i.e. the surface integral over the
/// chart part of the fixed boundary. Panel breaks sit on the estimator nodes
/// so piecewise-linear densities are integrated exactly.
pub fn boundary_integral<T: Real>(chart: &Chart<T>, panels: usize, f: impl Fn(T) -> Result<T>) -> Result<T> {
    let panels = panels.max(1);
    let breaks: Vec<T> = (0..=panels)
        .map(|k| T::lit(-1.0) + T::lit(2.0) * T::from_count(k) / T::from_count(panels))
        .collect();
    let rule = GaussLegendre::new(6);
    let mut err = None;
    let v = composite(&rule, &breaks, 4, |x| {
        match f(x).and_then(|v| Ok(v * boundary_jacobian(chart, x)?)) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                T::zero()
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Coefficient table at the estimator nodes plus the parametrization check.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientReport<T> {
    pub scenario: String,
    pub provenance: Provenance,
    pub rows: Vec<CoefficientRow<T>>,
    pub uniqueness: UniquenessReport<T>,
    pub checks: Vec<Check>,
}

impl<T: Real> CoefficientReport<T> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "x [chart]",
            "beta_closed [1]",
            "beta_estimate [1]",
            "gamma_closed [1]",
            "gamma_estimate [1]",
            "residual [1]",
            "pass [bool]",
        ])
        .map_err(csv_error)?;
        let pass = self.passed().to_string();
        for r in &self.rows {
            w.write_record([
                number(r.x),
                r.beta_closed.map(number).unwrap_or_default(),
                number(r.beta_est),
                r.gamma_closed.map(number).unwrap_or_default(),
                number(r.gamma_est),
                number(r.residual),
                pass.clone(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closed forms against the weak-limit estimator at every hat node, the
/// inequality `gamma >= 1`, and the parametrization independence of `beta`.
pub fn coefficient_study<T: Real>(sc: &Scenario<T>, opts: &LabOptions<T>) -> Result<CoefficientReport<T>> {
    let est = &opts.estimator;
    let rows = coefficient_table(&sc.chart, &sc.profile, est, est.hats - 1)?;
    let uniqueness = check_beta_uniqueness(&sc.chart, &sc.profile, opts.delta, &opts.uniqueness)?;
    let rel = |a: T, b: T| (a - b).abs() / b.abs().max(T::lit(1e-12));
    let mut worst_beta = T::zero();
    let mut worst_gamma = T::zero();
    for r in &rows {
        if let Some(b) = r.beta_closed {
            worst_beta = worst_beta.max(rel(r.beta_est, b));
        }
        if let Some(g) = r.gamma_closed {
            worst_gamma = worst_gamma.max(rel(r.gamma_est, g));
        }
    }
    let agree = T::lit(1e-2);
    let min_gamma = rows.iter().fold(T::infinity(), |m, r| m.min(r.gamma_est));
    let checks = vec![
        Check::new(
            "beta estimate matches closed form",
            worst_beta <= agree,
            format!("worst relative gap {worst_beta:e} (tolerance {agree:e})"),
        ),
        Check::new(
            "gamma estimate matches closed form",
            worst_gamma <= agree,
            format!("worst relative gap {worst_gamma:e} (tolerance {agree:e})"),
        ),
        Check::new(
            "gamma at least one",
            min_gamma >= T::one() - est.tolerance,
            format!("smallest gamma {min_gamma:e}"),
        ),
        Check::new(
            "beta independent of parametrization",
            uniqueness.passed(),
            format!(
                "max discrepancy {:e} (tolerance {:e})",
                uniqueness.max_discrepancy, uniqueness.tolerance
            ),
        ),
    ];
    Ok(CoefficientReport {
        scenario: sc.name.clone(),
        provenance: EffectiveCoefficients::for_profile(&sc.chart, &sc.profile, est)?.provenance(),
        rows,
        uniqueness,
        checks,
    })
}

/// `(1/eps) int_{omega_eps} h phi` against `int_{boundary} beta h phi dS`.
/// The deviation must fall along the ladder and the extrapolated strip
/// integral must land within 1% of the boundary integral.
pub fn concentrated_limit_study<T: Real>(
    sc: &Scenario<T>,
    h: impl Fn(Point<T>) -> T + Sync + Send,
    phi: impl Fn(Point<T>) -> T + Sync + Send,
    opts: &LabOptions<T>,
) -> Result<ConvergenceReport<T>> {
    let coeffs = EffectiveCoefficients::for_profile(&sc.chart, &sc.profile, &opts.estimator)?;
    let hp = |p: Point<T>| h(p) * phi(p);
    let target = boundary_integral(&sc.chart, opts.estimator.hats - 1, |x| {
        Ok(coeffs.beta(x)? * hp(sc.chart.trace(x)?))
    })?;
    let eps = sc.ladder.values();
    let values = over_ladder(&eps, opts.parallel, |e| {
        Ok(StripRegion::new(sc.perturbed(e)?).integrate(hp) / e)
    })?;
    let mut report = ConvergenceReport::new(
        "concentrated",
        &sc.name,
        vec![
            Column::new("strip_integral", "1"),
            Column::new("boundary_integral", "1"),
            Column::new("deviation", "1"),
        ],
        2,
    );
    let devs: Vec<T> = values.iter().map(|&v| (v - target).abs()).collect();
    for ((&e, &v), &d) in eps.iter().zip(&values).zip(&devs) {
        report.push_row(e, T::zero(), vec![v, target, d]);
    }
    let limit = aitken(&values).unwrap_or(*values.last().unwrap());
    report.extrapolated = Some(limit);
    let scale = target.abs();
    let tiny = T::tol(1e-12, 100.0) * scale.max(T::one());
    let exact = devs.iter().all(|&d| d <= tiny);
    report.checks.push(Check::new(
        "deviation decreases",
        exact || decreasing(&devs, tiny),
        format!("deviations {}", list(&devs)),
    ));
    let gap = (limit - target).abs();
    report.checks.push(Check::new(
        "extrapolated limit matches boundary integral",
        gap <= T::lit(1e-2) * scale || gap <= tiny,
        format!("extrapolated {limit:e}, target {target:e}, gap {gap:e}"),
    ));
    Ok(report)
}

/// Length of the oscillating boundary piece against `int gamma dS` and
/// against the length of the fixed boundary piece it replaces.
pub fn boundary_measure_study<T: Real>(sc: &Scenario<T>, opts: &LabOptions<T>) -> Result<ConvergenceReport<T>> {
    let coeffs = EffectiveCoefficients::for_profile(&sc.chart, &sc.profile, &opts.estimator)?;
    let panels = opts.estimator.hats - 1;
    let target = boundary_integral(&sc.chart, panels, |x| coeffs.gamma(x))?;
    let fixed = boundary_integral(&sc.chart, panels, |_| Ok(T::one()))?;
    let eps = sc.ladder.values();
    let lengths = over_ladder(&eps, opts.parallel, |e| {
        let line = boundary_polyline(sc, e, sc.mesh.h_for(e))?;
        Ok(line.windows(2).map(|w| dist(w[0], w[1])).sum::<T>())
    })?;
    let mut report = ConvergenceReport::new(
        "boundary_measure",
        &sc.name,
        vec![
            Column::new("length", "length"),
            Column::new("gamma_integral", "length"),
            Column::new("fixed_length", "length"),
            Column::new("relative_gap_to_gamma_integral", "1"),
            Column::new("relative_gap_to_fixed_length", "1"),
        ],
        3,
    );
    for (&e, &l) in eps.iter().zip(&lengths) {
        report.push_row(
            e,
            sc.mesh.h_for(e),
            vec![l, target, fixed, (l - target).abs() / target, (l - fixed).abs() / fixed],
        );
    }
    let limit = aitken(&lengths).unwrap_or(*lengths.last().unwrap());
    report.extrapolated = Some(limit);
    let gap = (limit - target).abs() / target;
    report.checks.push(Check::new(
        "length tends to the gamma integral",
        gap <= T::lit(1e-2),
        format!("extrapolated length {limit:e}, gamma integral {target:e}, relative gap {gap:e}"),
    ));
    let worst = lengths
        .iter()
        .fold(T::zero(), |m, &l| m.max((l - target).abs() / target));
    report.checks.push(Check::new(
        "every length within 2% of the gamma integral",
        worst <= T::lit(0.02),
        format!("worst relative gap {worst:e}"),
    ));
    let excess = (target - fixed) / fixed;
    report.notes.push(format!(
        "the oscillating boundary is {:.2}% longer than the fixed one in the limit",
        (excess * T::lit(100.0)).to_f64_lossy()
    ));
    Ok(report)
}

/// Largest eigenvalues of the boundary mass and of the strip mass scaled
/// by `1/eps` against the `H^1` form on every ladder mesh; both sequences
/// must stay within a factor 2.
pub fn trace_constant_study<T: Real>(sc: &Scenario<T>, opts: &LabOptions<T>) -> Result<ConvergenceReport<T>> {
    let eps = sc.ladder.values();
    let rows = over_ladder(&eps, opts.parallel, |e| {
        let h = sc.mesh.h_for(e);
        let mesh = mesh_domain(sc, e, h)?;
        let ops = assemble_h1_operator(&mesh)?;
        let trace = largest_generalized(&boundary_mass(&mesh, None, |_| T::one()), &ops.a, 1, &opts.eigen)?;
        let strip = strip_mass(&mesh, e, |_| T::one())?;
        let concentrated = if strip.values().iter().all(|&v| v == T::zero()) {
            T::zero()
        } else {
            largest_generalized(&strip, &ops.a, 1, &opts.eigen)?.values[0]
        };
        Ok((h, mesh.n_vertices(), trace.values[0], concentrated))
    })?;
    let mut report = ConvergenceReport::new(
        "trace",
        &sc.name,
        vec![
            Column::new("boundary_trace_constant", "1"),
            Column::new("concentrated_trace_constant", "1"),
            Column::new("vertices", "count"),
        ],
        0,
    );
    for (&e, &(h, n, a, b)) in eps.iter().zip(&rows) {
        report.push_row(e, h, vec![a, b, T::from_count(n)]);
    }
    for (k, name) in [
        (0, "boundary trace constant uniform"),
        (1, "concentrated trace constant uniform"),
    ] {
        let v: Vec<T> = rows.iter().map(|r| if k == 0 { r.2 } else { r.3 }).collect();
        let (lo, hi) = v
            .iter()
            .fold((T::infinity(), T::zero()), |(a, b), &x| (a.min(x), b.max(x)));
        let ratio = hi / lo;
        report.checks.push(Check::new(
            name,
            lo > T::zero() && ratio <= T::lit(2.0),
            format!("max/min ratio {ratio:e} over {}", list(&v)),
        ));
    }
    Ok(report)
}

pub(crate) fn list<T: Real>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}
