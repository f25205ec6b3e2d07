use super::extension::{Distance, Extension};
use super::report::{aitken, convergence_check, decreasing, Check, Column, ConvergenceReport};
use super::studies::{list, over_ladder};
use super::LabOptions;
use crate::assembly::{strip_mass, DiscreteProblem, Field, LimitProblem, PerturbedProblem};
use crate::coefficients::EffectiveCoefficients;
use crate::error::Result;
use crate::mesh::{mesh_domain, Locator, Mesh};
use crate::scalar::{dot, Real};
use crate::scenario::Scenario;
use crate::solvers::{solve_eigen, solve_nonlinear, SolveReport};

/// Quantities measured at one ladder point. The limit problem is solved on
/// the fixed-domain part of the same mesh, so the two discretizations share
/// every vertex below the strip.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSolution<T> {
    pub eps: T,
    pub h: T,
    pub vertices: usize,
    /// `|u_eps - E_eps u0|` on `Omega_eps`.
    pub distance: Distance<T>,
    /// `|R u_eps - u0|` on the fixed domain.
    pub restricted: Distance<T>,
    /// `|u_eps - E_eps u0|` in `L^2` of the strip.
    pub strip_l2: T,
    /// `<h_eps(u_eps), u_eps>` and `<h_0(u0), u0>`.
    pub pairing: (T, T),
    pub solve_eps: SolveReport<T>,
    pub solve_limit: SolveReport<T>,
    /// Smallest eigenvalues of the linearizations (perturbed, limit), if requested.
    pub eigenvalues: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Real> LevelSolution<T> {
    pub fn pairing_gap(&self) -> T {
        (self.pairing.0 - self.pairing.1).abs()
    }
}

/// Fields and meshes of one level, kept for the refinement control.
struct Fields<T> {
    mesh: Mesh<T>,
    base: Mesh<T>,
    u_eps: Vec<T>,
    u0: Vec<T>,
}

/// Differences between a ladder level and its refined control run.
#[derive(Clone, Debug, PartialEq)]
pub struct Floors<T> {
    /// Estimated `H^1` discretization error in the distance: the change of
    /// `u_eps` plus that of `u0` under refinement, both measured on the fine meshes.
    pub distance: T,
    pub pairing: T,
    pub eigenvalues: Option<Vec<T>>,
}

/// All ladder levels of one scenario, possibly cut short by a solver failure.
#[derive(Clone, Debug)]
pub struct SolutionLadder<T> {
    pub scenario: String,
    pub levels: Vec<LevelSolution<T>>,
    pub failure: Option<(T, String)>,
    pub floors: Option<Floors<T>>,
}

fn solve_level<T: Real>(
    sc: &Scenario<T>,
    coeffs: &EffectiveCoefficients<T>,
    eps: T,
    refine: bool,
    opts: &LabOptions<T>,
    with_eigen: bool,
) -> Result<(LevelSolution<T>, Fields<T>)> {
    let mut sc = sc.clone();
    let mut h = sc.mesh.h_for(eps);
    if refine {
        h = h * T::lit(0.5);
        sc.mesh.h_interior = sc.mesh.h_interior * T::lit(0.5);
    }
    let mesh = mesh_domain(&sc, eps, h)?;
    let (base, map) = mesh.restrict_to_base()?;
    let nl = &sc.nonlinearity;
    let limit = LimitProblem::new(&base, &sc.chart, coeffs, nl)?;
    let (u0, solve_limit) = solve_nonlinear(&limit, &vec![T::zero(); base.n_vertices()], &opts.nonlinear)?;
    let ext = Extension::new(&base, &mesh, &sc.chart)?.apply(&Field { values: u0.clone() })?;
    let pert = PerturbedProblem::new(&mesh, nl, eps)?;
    let (u_eps, solve_eps) = solve_nonlinear(&pert, &ext.values, &opts.nonlinear)?;

    let distance = Distance::between(pert.operators(), &u_eps, &ext.values)?;
    let restricted_u: Vec<T> = map.iter().map(|&v| u_eps[v]).collect();
    let restricted = Distance::between(limit.operators(), &restricted_u, &u0)?;
    let diff: Vec<T> = u_eps.iter().zip(&ext.values).map(|(&a, &b)| a - b).collect();
    let strip_l2 = (strip_mass(&mesh, eps, |_| T::one())?.quadratic_form(&diff) * eps)
        .max(T::zero())
        .sqrt();
    let pairing = (dot(&pert.load(&u_eps)?, &u_eps), dot(&limit.load(&u0)?, &u0));
    let eigenvalues = if with_eigen {
        let k = opts.eigen_count;
        let le = solve_eigen(&pert.linearization(&u_eps)?, &pert.operators().mass, k, &opts.eigen)?;
        let l0 = solve_eigen(&limit.linearization(&u0)?, &limit.operators().mass, k, &opts.eigen)?;
        Some((le.values, l0.values))
    } else {
        None
    };
    let level = LevelSolution {
        eps,
        h,
        vertices: mesh.n_vertices(),
        distance,
        restricted,
        strip_l2,
        pairing,
        solve_eps,
        solve_limit,
        eigenvalues,
    };
    drop(pert);
    drop(limit);
    Ok((level, Fields { mesh, base, u_eps, u0 }))
}

/// `H^1` norm on `fine` of the difference between the nodal interpolant of
/// the coarse field and the fine field.
fn refinement_gap<T: Real>(coarse: &Mesh<T>, uc: &[T], fine: &Mesh<T>, uf: &[T]) -> Result<T> {
    let loc = Locator::new(coarse);
    let lifted: Vec<T> = fine.vertices.iter().map(|&p| loc.evaluate(uc, p)).collect();
    let ops = crate::assembly::assemble_h1_operator(fine)?;
    Ok(Distance::between(&ops, &lifted, uf)?.h1)
}

type LevelResult<T> = Result<(LevelSolution<T>, Option<Fields<T>>)>;

/// Solves the perturbed and the limit problem at every ladder point, with
/// `E_eps u0` as initial guess for `u_eps`. With `control`, the smallest
/// `eps` is solved again on a mesh with both mesh sizes halved to measure
/// the discretization floor.
pub fn solve_ladder<T: Real>(sc: &Scenario<T>, opts: &LabOptions<T>, with_eigen: bool) -> Result<SolutionLadder<T>> {
    let coeffs = EffectiveCoefficients::for_profile(&sc.chart, &sc.profile, &opts.estimator)?;
    let eps = sc.ladder.values();
    let last = *eps.last().expect("validated ladder is not empty");
    let results: Vec<LevelResult<T>> = over_ladder(&eps, opts.parallel, |e| {
        Ok(solve_level(sc, &coeffs, e, false, opts, with_eigen)
            .map(|(l, f)| (l, if e == last && opts.control { Some(f) } else { None })))
    })?;
    let mut ladder = SolutionLadder {
        scenario: sc.name.clone(),
        levels: Vec::new(),
        failure: None,
        floors: None,
    };
    let mut kept = None;
    for (e, r) in eps.iter().zip(results) {
        match r {
            Ok((level, fields)) => {
                ladder.levels.push(level);
                kept = fields.or(kept);
            }
            Err(err) => {
                ladder.failure = Some((*e, err.to_string()));
                return Ok(ladder);
            }
        }
    }
    if let Some(coarse) = kept {
        let (fine_level, fine) = match solve_level(sc, &coeffs, last, true, opts, with_eigen) {
            Ok(r) => r,
            Err(err) => {
                ladder.failure = Some((last, format!("refinement control: {err}")));
                return Ok(ladder);
            }
        };
        let coarse_level = ladder.levels.last().unwrap();
        let distance = refinement_gap(&coarse.mesh, &coarse.u_eps, &fine.mesh, &fine.u_eps)?
            + refinement_gap(&coarse.base, &coarse.u0, &fine.base, &fine.u0)?;
        let pairing = (coarse_level.pairing.0 - fine_level.pairing.0).abs()
            + (coarse_level.pairing.1 - fine_level.pairing.1).abs();
        let eigenvalues = match (&coarse_level.eigenvalues, &fine_level.eigenvalues) {
            (Some((ce, c0)), Some((fe, f0))) => Some(
                (0..ce.len())
                    .map(|j| (ce[j] - fe[j]).abs() + (c0[j] - f0[j]).abs())
                    .collect(),
            ),
            _ => None,
        };
        ladder.floors = Some(Floors {
            distance,
            pairing,
            eigenvalues,
        });
    }
    Ok(ladder)
}

fn solver_check<T: Real>(report: &mut ConvergenceReport<T>, ladder: &SolutionLadder<T>) {
    match &ladder.failure {
        None => report.checks.push(Check::new("all solves succeeded", true, "")),
        Some((e, msg)) => report.checks.push(Check::new(
            "all solves succeeded",
            false,
            format!("aborted at eps = {e:e}: {msg}"),
        )),
    }
}

/// Distances between perturbed and limit solutions along the ladder.
pub fn main_report<T: Real>(ladder: &SolutionLadder<T>) -> ConvergenceReport<T> {
    let mut report = ConvergenceReport::new(
        "main",
        &ladder.scenario,
        vec![
            Column::new("h1_distance", "H1 norm"),
            Column::new("l2_distance", "L2 norm"),
            Column::new("hs_half_bound", "H1/2 norm"),
            Column::new("restricted_h1_distance", "H1 norm"),
            Column::new("restricted_l2_distance", "L2 norm"),
            Column::new("strip_l2_distance", "L2 norm"),
            Column::new("pairing_eps", "H1 norm squared"),
            Column::new("pairing_limit", "H1 norm squared"),
            Column::new("pairing_gap", "H1 norm squared"),
            Column::new("nonlinear_iterations", "count"),
            Column::new("vertices", "count"),
        ],
        0,
    );
    for l in &ladder.levels {
        report.push_row(
            l.eps,
            l.h,
            vec![
                l.distance.h1,
                l.distance.l2,
                (l.distance.l2 * l.distance.h1).sqrt(),
                l.restricted.h1,
                l.restricted.l2,
                l.strip_l2,
                l.pairing.0,
                l.pairing.1,
                l.pairing_gap(),
                T::from_count(l.solve_eps.iterations),
                T::from_count(l.vertices),
            ],
        );
    }
    solver_check(&mut report, ladder);
    let floors = ladder.floors.as_ref();
    report.floor = floors.map(|f| f.distance);
    let d: Vec<T> = ladder.levels.iter().map(|l| l.distance.h1).collect();
    let scale = ladder
        .levels
        .iter()
        .fold(T::zero(), |m, l| m.max(l.pairing.0.abs().sqrt()));
    let slack = floors.map_or(T::zero(), |f| f.distance);
    let zero = T::tol(1e-12, 100.0) * scale.max(T::one());
    let monotone = decreasing(&d, slack.max(zero));
    report.checks.push(Check::new(
        "H1 distance decreases",
        monotone,
        format!("distances {} (slack {slack:e})", list(&d)),
    ));
    let (check, limit) = convergence_check("H1 distance converges", &d, report.floor, scale);
    report.extrapolated = Some(limit);
    report.checks.push(check);
    let gaps: Vec<T> = ladder.levels.iter().map(|l| l.pairing_gap()).collect();
    let pslack = floors.map_or(T::zero(), |f| f.pairing);
    report.checks.push(Check::new(
        "pairing gap decreases",
        decreasing(&gaps, pslack.max(zero)),
        format!("gaps {} (slack {pslack:e})", list(&gaps)),
    ));
    report
        .checks
        .push(convergence_check("pairing gap converges", &gaps, floors.map(|f| f.pairing), scale * scale).0);
    let tol = T::tol(1e-9, 100.0);
    let contracts = ladder
        .levels
        .iter()
        .all(|l| l.restricted.l2 <= l.distance.l2 * (T::one() + tol) + zero);
    report
        .checks
        .push(Check::new("restriction contracts the L2 distance", contracts, ""));
    let split = ladder.levels.iter().all(|l| {
        let lhs = l.distance.l2 * l.distance.l2;
        let rhs = l.restricted.l2 * l.restricted.l2 + l.strip_l2 * l.strip_l2;
        lhs <= rhs * (T::one() + tol) + zero
    });
    report
        .checks
        .push(Check::new("L2 distance splits into fixed domain and strip", split, ""));
    if !monotone && ladder.failure.is_none() {
        report.notes.push(
            "every nonlinear solve converged but the distance is not monotone: the solver may have \
             landed on different solution branches"
                .into(),
        );
    }
    report
}

/// Gaps between the smallest linearization eigenvalues on `Omega_eps` and
/// on the fixed domain. Passes when every gap decreases after the first
/// level; the comparison with the refinement floor is reported as a note.
pub fn eigen_report<T: Real>(ladder: &SolutionLadder<T>) -> ConvergenceReport<T> {
    let k = ladder
        .levels
        .first()
        .and_then(|l| l.eigenvalues.as_ref())
        .map_or(0, |e| e.0.len());
    let mut columns = Vec::new();
    for j in 0..k {
        columns.push(Column::new(&format!("lambda{}_eps", j + 1), "1"));
        columns.push(Column::new(&format!("lambda{}_limit", j + 1), "1"));
        columns.push(Column::new(&format!("gap{}", j + 1), "1"));
    }
    let mut report = ConvergenceReport::new("eigen", &ladder.scenario, columns, 2);
    for l in &ladder.levels {
        let Some((le, l0)) = &l.eigenvalues else { continue };
        let row = (0..k).flat_map(|j| [le[j], l0[j], (le[j] - l0[j]).abs()]).collect();
        report.push_row(l.eps, l.h, row);
    }
    solver_check(&mut report, ladder);
    if k == 0 {
        report
            .checks
            .push(Check::new("eigenvalues computed", false, "no eigenvalues"));
        return report;
    }
    let floors = ladder.floors.as_ref().and_then(|f| f.eigenvalues.clone());
    report.floor = floors.as_ref().map(|f| f[0]);
    for j in 0..k {
        let gaps: Vec<T> = report.rows.iter().map(|r| r[3 * j + 2]).collect();
        let scale = report.rows.iter().fold(T::zero(), |m, r| m.max(r[3 * j + 1].abs()));
        let zero = T::tol(1e-12, 100.0) * scale.max(T::one());
        let tail = if gaps.len() > 1 { &gaps[1..] } else { &gaps[..] };
        report.checks.push(Check::new(
            format!("gap {} decreases after the first level", j + 1),
            decreasing(tail, zero),
            format!("gaps {}", list(&gaps)),
        ));
        let last = *gaps.last().unwrap_or(&T::zero());
        let extrapolated = aitken(&gaps);
        if j == 0 {
            report.extrapolated = extrapolated;
        }
        let floor = floors.as_ref().map(|f| f[j]);
        report.notes.push(format!(
            "gap {}: final {last:e}, discretization floor {}, final/floor {}, extrapolated {}",
            j + 1,
            floor.map_or("n/a".to_string(), |f| format!("{f:e}")),
            floor.map_or("n/a".to_string(), |f| format!("{:.3}", (last / f).to_f64_lossy())),
            extrapolated.map_or("n/a".to_string(), |g| format!("{g:e}"))
        ));
    }
    report
}

/// Perturbed against limit solutions along the ladder, with the
/// refinement control at the smallest `eps`.
pub fn main_convergence_study<T: Real>(sc: &Scenario<T>, opts: &LabOptions<T>) -> Result<ConvergenceReport<T>> {
    Ok(main_report(&solve_ladder(sc, opts, false)?))
}

/// Eigenvalues of the linearizations around the perturbed and limit solutions.
pub fn eigen_convergence_study<T: Real>(sc: &Scenario<T>, opts: &LabOptions<T>) -> Result<ConvergenceReport<T>> {
    Ok(eigen_report(&solve_ladder(sc, opts, true)?))
}
