use super::cg::{CgOptions, LinearMethod, SolveReport, SpdSolver};
use crate::assembly::DiscreteProblem;
use crate::error::{Error, Result};
use crate::scalar::{norm2, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearOptions<T> {
    /// Target for `|A u - h(u)| / max(|A u|, |h(u)|, |A u_0 - h(u_0)|)`.
    pub tol: T,
    /// Picard damping `theta` in `u <- (1 - theta) u + theta A^{-1} h(u)`.
    pub damping: T,
    pub max_picard: usize,
    pub max_newton: usize,
    /// Picard counts as stalled when the residual drops by less than
    /// `stall_reduction` over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_reduction: T,
    pub linear: CgOptions<T>,
}

impl<T: Real> Default for NonlinearOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-10, 1e3),
            damping: T::lit(0.5),
            max_picard: 200,
            max_newton: 40,
            stall_window: 5,
            stall_reduction: T::lit(0.02),
            linear: CgOptions {
                tol: T::tol(1e-12, 10.0),
                method: LinearMethod::Cholesky,
                ..CgOptions::default()
            },
        }
    }
}

/// Residual relative to the larger of the current terms and `floor` (the
/// initial residual norm), so that iterations towards `u = 0` can terminate.
fn relative_residual<T: Real, P: DiscreteProblem<T> + ?Sized>(p: &P, u: &[T], floor: T) -> Result<(T, Vec<T>)> {
    let au = p.operators().a.matvec(u);
    let h = p.load(u)?;
    let r: Vec<T> = au.iter().zip(&h).map(|(&a, &b)| a - b).collect();
    let scale = norm2(&au).max(norm2(&h)).max(floor);
    let rn = norm2(&r);
    let rel = if scale > T::zero() { rn / scale } else { rn };
    Ok((rel, r))
}

fn failure<T: Real>(iterations: usize, history: &[T]) -> Error {
    Error::NonlinearNonConvergence {
        iterations,
        residual: history.last().map_or(f64::NAN, |v| v.to_f64_lossy()),
        history: history.iter().map(|v| v.to_f64_lossy()).collect(),
    }
}

/// Solves `A u = h(u)` by damped Picard iteration, switching to Newton with
/// backtracking line search when Picard stalls. Returns any converged
/// solution; uniqueness is not implied.
pub fn solve_nonlinear<T: Real, P: DiscreteProblem<T> + ?Sized>(
    problem: &P,
    initial: &[T],
    opts: &NonlinearOptions<T>,
) -> Result<(Vec<T>, SolveReport<T>)> {
    if initial.len() != problem.dim() {
        return Err(Error::Consistency(format!(
            "initial guess has {} values for dimension {}",
            initial.len(),
            problem.dim()
        )));
    }
    let mut u = initial.to_vec();
    let floor = norm2(&problem.residual(&u)?);
    let (mut res, _) = relative_residual(problem, &u, floor)?;
    let mut history = vec![res];
    let mut damping = Vec::new();
    let done = |res: T, history: Vec<T>, damping: Vec<T>, u: Vec<T>, newton_start: Option<usize>| {
        Ok((
            u,
            SolveReport {
                iterations: history.len() - 1,
                residual: res,
                converged: true,
                history,
                damping,
                newton_start,
            },
        ))
    };
    if res <= opts.tol {
        return done(res, history, damping, u, None);
    }

    let a = SpdSolver::new(&problem.operators().a, opts.linear.clone())?;
    let theta = opts.damping;
    for it in 0..opts.max_picard {
        let h = problem.load(&u)?;
        let (v, _) = a.solve(&h, Some(&u))?;
        for (ui, vi) in u.iter_mut().zip(v) {
            *ui = (T::one() - theta) * *ui + theta * vi;
        }
        damping.push(theta);
        res = relative_residual(problem, &u, floor)?.0;
        history.push(res);
        if res <= opts.tol {
            return done(res, history, damping, u, None);
        }
        let w = opts.stall_window;
        let stalled = it + 1 >= w && res > (T::one() - opts.stall_reduction) * history[history.len() - 1 - w];
        if stalled || !res.is_finite() {
            break;
        }
    }
    if !res.is_finite() {
        // a diverged Picard phase gives Newton nothing to start from
        u = initial.to_vec();
        res = relative_residual(problem, &u, floor)?.0;
        history.push(res);
    }

    let newton_start = Some(history.len() - 1);
    for _ in 0..opts.max_newton {
        let (_, r) = relative_residual(problem, &u, floor)?;
        let jac = problem.linearization(&u)?;
        let neg: Vec<T> = r.iter().map(|&x| -x).collect();
        let (step, _) = SpdSolver::new(&jac, opts.linear.clone())?.solve(&neg, None)?;
        let mut t = T::one();
        let accepted = loop {
            let trial: Vec<T> = u.iter().zip(&step).map(|(&a, &b)| a + t * b).collect();
            let tr = relative_residual(problem, &trial, floor)?.0;
            if tr < res * (T::one() - T::lit(1e-4) * t) || tr <= opts.tol {
                break Some((trial, tr));
            }
            t = t * T::lit(0.5);
            if t < T::lit(1.0 / 1024.0) {
                break None;
            }
        };
        let Some((trial, tr)) = accepted else {
            return Err(failure(history.len() - 1, &history));
        };
        u = trial;
        res = tr;
        damping.push(t);
        history.push(res);
        if res <= opts.tol {
            return done(res, history, damping, u, newton_start);
        }
    }
    Err(failure(history.len() - 1, &history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{DiscreteProblem, Field, LimitProblem};
    use crate::coefficients::EffectiveCoefficients;
    use crate::geometry::Chart;
    use crate::mesh::Mesh;
    use crate::nonlinearity::{Nonlinearity, Reaction};

    #[test]
    fn zero_nonlinearity_gives_zero() {
        let mesh = Mesh::<f64>::structured_rectangle(-1.0, -1.0, 1.0, 0.0, 8, 4);
        let nl = Nonlinearity::zero();
        let c = EffectiveCoefficients::constant(1.0, 1.0);
        let p = LimitProblem::new(&mesh, &Chart::FlatStrip, &c, &nl).unwrap();
        let (u, rep) = solve_nonlinear(&p, &Field::zeros(&mesh).values, &NonlinearOptions::default()).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
        assert!(rep.iterations <= 1 && rep.converged);
    }

    #[test]
    fn monotone_boundary_term_returns_zero() {
        let mesh = Mesh::<f64>::structured_rectangle(-1.0, -1.0, 1.0, 0.0, 8, 4);
        let nl = Nonlinearity::new(Reaction::zero(), Reaction::affine(1.0, 0.0), 10.0);
        let c = EffectiveCoefficients::constant(0.0, 1.0);
        let p = LimitProblem::new(&mesh, &Chart::FlatStrip, &c, &nl).unwrap();
        let init: Vec<f64> = (0..mesh.n_vertices())
            .map(|i| 1e-2 * ((i * 7919) % 13) as f64)
            .collect();
        let opts = NonlinearOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let (u, rep) = solve_nonlinear(&p, &init, &opts).unwrap();
        assert!(u.iter().all(|&v| v.abs() < 1e-10), "{:?}", rep.history);
        if let Some(k) = rep.newton_start {
            for w in rep.history[k..].windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn newton_takes_over_when_picard_stalls() {
        // strongly coupled boundary term: damped Picard cannot contract
        let mesh = Mesh::<f64>::structured_rectangle(-1.0, -1.0, 1.0, 0.0, 8, 4);
        let nl = Nonlinearity::new(Reaction::zero(), Reaction::affine(8.0, -1.0), 10.0);
        let c = EffectiveCoefficients::constant(0.0, 1.0);
        let p = LimitProblem::new(&mesh, &Chart::FlatStrip, &c, &nl).unwrap();
        let (u, rep) = solve_nonlinear(&p, &vec![0.0; mesh.n_vertices()], &NonlinearOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.residual <= 1e-10);
        assert!(rep.newton_start.is_some());
        let r = p.residual(&u).unwrap();
        let h = p.load(&u).unwrap();
        assert!(norm2(&r) <= 1e-9 * norm2(&h));
    }
}
