use super::report::{Check, Column, ConvergenceReport};
use crate::assembly::assemble_h1_operator;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::scalar::{Point, Real};
use crate::solvers::{solve_eigen, CgOptions, EigenOptions, LinearMethod, SpdSolver};

/// Degree-5 rule on a triangle: barycentric points and weights summing to one.
fn dunavant5<T: Real>() -> Vec<([T; 3], T)> {
    let mut rule = vec![([T::lit(1.0 / 3.0); 3], T::lit(0.225))];
    for (a, b, w) in [
        (0.059715871789770, 0.470142064105115, 0.132394152788506),
        (0.797426985353087, 0.101286507323456, 0.125939180544827),
    ] {
        let (a, b, w) = (T::lit(a), T::lit(b), T::lit(w));
        rule.push(([a, b, b], w));
        rule.push(([b, a, b], w));
        rule.push(([b, b, a], w));
    }
    rule
}

/// Errors of one manufactured-solution level.
#[derive(Clone, Debug, PartialEq)]
pub struct MmsLevel<T> {
    pub n: usize,
    pub h1_error: T,
    pub l2_error: T,
}

/// Solves `-Laplace u + u = f` with zero Neumann data on `unit_square(n)` for
/// `u = cos(pi x) cos(pi y)` and measures the `H^1` and `L^2` errors with a
/// degree-5 rule. Passes when the observed orders reach 0.9 and 1.8.
pub fn manufactured_solution_study<T: Real>(sizes: &[usize]) -> Result<ConvergenceReport<T>> {
    let pi = T::PI();
    let exact = |p: Point<T>| (pi * p[0]).cos() * (pi * p[1]).cos();
    let grad = |p: Point<T>| {
        [
            -pi * (pi * p[0]).sin() * (pi * p[1]).cos(),
            -pi * (pi * p[0]).cos() * (pi * p[1]).sin(),
        ]
    };
    let rhs = |p: Point<T>| (T::one() + T::lit(2.0) * pi * pi) * exact(p);
    let rule = dunavant5::<T>();
    let mut report = ConvergenceReport::new(
        "manufactured_solution",
        "unit_square",
        vec![Column::new("h1_error", "H1 norm"), Column::new("l2_error", "L2 norm")],
        0,
    );
    for &n in sizes {
        let mesh = Mesh::<T>::unit_square(n);
        let ops = assemble_h1_operator(&mesh)?;
        let mut b = vec![T::zero(); mesh.n_vertices()];
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let area = mesh.signed_area(t).abs();
            for (l, w) in &rule {
                let p = bary(&c, l);
                let f = rhs(p) * *w * area;
                for k in 0..3 {
                    b[mesh.triangles[t][k]] = b[mesh.triangles[t][k]] + f * l[k];
                }
            }
        }
        let opts = CgOptions {
            tol: T::tol(1e-12, 10.0),
            method: LinearMethod::Cholesky,
            ..CgOptions::default()
        };
        let (u, _) = SpdSolver::new(&ops.a, opts)?.solve(&b, None)?;
        let (mut e1, mut e0) = (T::zero(), T::zero());
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let tri = mesh.triangles[t];
            let area = mesh.signed_area(t);
            // gradient of the linear interpolant through the three nodal values
            let (dx1, dy1) = (c[1][0] - c[0][0], c[1][1] - c[0][1]);
            let (dx2, dy2) = (c[2][0] - c[0][0], c[2][1] - c[0][1]);
            let (du1, du2) = (u[tri[1]] - u[tri[0]], u[tri[2]] - u[tri[0]]);
            let two_a = T::lit(2.0) * area;
            let gh = [(du1 * dy2 - du2 * dy1) / two_a, (dx1 * du2 - dx2 * du1) / two_a];
            for (l, w) in &rule {
                let p = bary(&c, l);
                let uh = l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]];
                let e = uh - exact(p);
                let g = grad(p);
                let (ex, ey) = (gh[0] - g[0], gh[1] - g[1]);
                let wa = *w * area.abs();
                e0 = e0 + wa * e * e;
                e1 = e1 + wa * (e * e + ex * ex + ey * ey);
            }
        }
        report.push_row(T::zero(), T::one() / T::from_count(n), vec![e1.sqrt(), e0.sqrt()]);
    }
    let rate = |col: usize| {
        let k = report.rows.len();
        if k < 2 {
            return T::zero();
        }
        let (a, b) = (report.rows[k - 2][col], report.rows[k - 1][col]);
        (a / b).ln() / (report.h[k - 2] / report.h[k - 1]).ln()
    };
    let (r1, r0) = (rate(0), rate(1));
    report.checks.push(Check::new(
        "H1 error order at least 0.9",
        r1 >= T::lit(0.9),
        format!("observed {r1:.4}"),
    ));
    report.checks.push(Check::new(
        "L2 error order at least 1.8",
        r0 >= T::lit(1.8),
        format!("observed {r0:.4}"),
    ));
    Ok(report)
}

fn bary<T: Real>(c: &[Point<T>; 3], l: &[T; 3]) -> Point<T> {
    [
        l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0],
        l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1],
    ]
}

/// The six smallest eigenvalues of `-Laplace + 1` with Neumann data on
/// `unit_square(n)` against `1 + pi^2 (m^2 + k^2)`, within 1%.
pub fn neumann_square_study<T: Real>(n: usize, opts: &EigenOptions<T>) -> Result<ConvergenceReport<T>> {
    let mesh = Mesh::<T>::unit_square(n);
    let ops = assemble_h1_operator(&mesh)?;
    let pi2 = T::PI() * T::PI();
    let exact: Vec<T> = [0, 1, 1, 2, 4, 4]
        .iter()
        .map(|&s| T::one() + pi2 * T::from_count(s))
        .collect();
    let eig = solve_eigen(&ops.a, &ops.mass, exact.len(), opts)?;
    let mut report = ConvergenceReport::new(
        "neumann_square",
        "unit_square",
        vec![
            Column::new("index", "count"),
            Column::new("computed", "1"),
            Column::new("exact", "1"),
            Column::new("relative_error", "1"),
        ],
        3,
    );
    let h = T::one() / T::from_count(n);
    let mut worst = T::zero();
    for (j, (&c, &e)) in eig.values.iter().zip(&exact).enumerate() {
        let rel = (c - e).abs() / e;
        worst = worst.max(rel);
        report.push_row(T::zero(), h, vec![T::from_count(j + 1), c, e, rel]);
    }
    report.checks.push(Check::new(
        "Neumann eigenvalues within 1%",
        worst <= T::lit(0.01),
        format!("worst relative error {worst:e}"),
    ));
    Ok(report)
}
