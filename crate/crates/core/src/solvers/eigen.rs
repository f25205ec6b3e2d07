use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cg::{CgOptions, LinearMethod, SpdSolver};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Real};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions<T> {
    /// Relative residual target `|S v - l M v| / (|S v| + |l| |M v|)`.
    pub tol: T,
    /// Dense solve below this dimension.
    pub dense_below: usize,
    /// Block size beyond the number of wanted pairs.
    pub extra: usize,
    /// Krylov block steps between restarts.
    pub steps: usize,
    pub max_restarts: usize,
    pub inner: CgOptions<T>,
    pub seed: u64,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-8, 1e4),
            dense_below: 500,
            extra: 3,
            steps: 4,
            max_restarts: 60,
            inner: CgOptions {
                tol: T::tol(1e-11, 10.0),
                method: LinearMethod::Cholesky,
                ..CgOptions::default()
            },
            seed: 0x5eed,
        }
    }
}

/// Eigenvalues with eigenvectors normalized in the inner product of the
/// positive definite operator of the pencil.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    /// Relative residual of each pair.
    pub residuals: Vec<T>,
}

fn to_dense<T: Real>(a: &SparseMatrix<T>) -> DMatrix<f64> {
    let n = a.n();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            d[(i, j)] = v.to_f64_lossy();
        }
    }
    d
}

/// Relative residual of `(value, v)` for the pencil `S v = value M v`.
pub fn pair_residual<T: Real>(s: &SparseMatrix<T>, m: &SparseMatrix<T>, value: T, v: &[T]) -> T {
    let sv = s.matvec(v);
    let mv = m.matvec(v);
    let r: Vec<T> = sv.iter().zip(&mv).map(|(&a, &b)| a - value * b).collect();
    let scale = norm2(&sv) + value.abs() * norm2(&mv);
    if scale > T::zero() {
        norm2(&r) / scale
    } else {
        norm2(&r)
    }
}

/// All eigenpairs of `S v = l M v` by Cholesky reduction of `M` and a dense
/// symmetric eigensolve; ascending, vectors `M`-orthonormal.
pub fn dense_generalized<T: Real>(s: &SparseMatrix<T>, m: &SparseMatrix<T>) -> Result<EigenPairs<T>> {
    let n = s.n();
    if m.n() != n {
        return Err(Error::Consistency("pencil operators differ in dimension".into()));
    }
    let chol = to_dense(m)
        .cholesky()
        .ok_or_else(|| Error::Eigen("mass-like operator is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let mut c = &linv * to_dense(s) * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let back = linv.transpose() * &eig.eigenvectors;
    let mut pairs = EigenPairs {
        values: Vec::with_capacity(n),
        vectors: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
    };
    for k in order {
        let value = T::lit(eig.eigenvalues[k]);
        let v: Vec<T> = back.column(k).iter().map(|&x| T::lit(x)).collect();
        pairs.residuals.push(pair_residual(s, m, value, &v));
        pairs.values.push(value);
        pairs.vectors.push(v);
    }
    Ok(pairs)
}

/// Basis kept orthonormal in the `C` inner product, with `C q` stored.
struct Basis<T> {
    q: Vec<Vec<T>>,
    cq: Vec<Vec<T>>,
}

impl<T: Real> Basis<T> {
    fn push(&mut self, c: &SparseMatrix<T>, mut w: Vec<T>) -> bool {
        let mut cw = c.matvec(&w);
        let start = dot(&w, &cw).max(T::zero()).sqrt();
        if !(start > T::zero()) {
            return false;
        }
        for _ in 0..2 {
            for (q, cq) in self.q.iter().zip(&self.cq) {
                let coef = dot(cq, &w);
                axpy(-coef, q, &mut w);
            }
            cw = c.matvec(&w);
        }
        let nrm = dot(&w, &cw).max(T::zero()).sqrt();
        if !(nrm > start * T::lit(1e-8)) {
            return false;
        }
        let inv = T::one() / nrm;
        w.iter_mut().for_each(|x| *x = *x * inv);
        cw.iter_mut().for_each(|x| *x = *x * inv);
        self.q.push(w);
        self.cq.push(cw);
        true
    }
}

/// Ritz values, Ritz vectors and their residuals.
type RitzPairs<T> = (Vec<T>, Vec<Vec<T>>, Vec<T>);

/// Largest `want` eigenvalues `theta` of `D x = theta C x` (`C` positive
/// definite, `D` symmetric) by restarted block Krylov iteration on `C^{-1} D`
/// with Rayleigh-Ritz projection. `residual(theta, x)` decides convergence.
fn block_krylov_largest<T: Real>(
    c: &SparseMatrix<T>,
    d: &SparseMatrix<T>,
    want: usize,
    opts: &EigenOptions<T>,
    residual: &dyn Fn(T, &[T]) -> T,
) -> Result<RitzPairs<T>> {
    let n = c.n();
    let block = (want + opts.extra).min(n);
    let solver = SpdSolver::new(c, opts.inner.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<T>> = (0..block)
        .map(|_| (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let mut worst = T::infinity();
    for _restart in 0..opts.max_restarts {
        let mut basis = Basis {
            q: Vec::new(),
            cq: Vec::new(),
        };
        let mut last: Vec<usize> = Vec::new();
        for w in start.drain(..) {
            if basis.push(c, w) {
                last.push(basis.q.len() - 1);
            }
        }
        for _ in 0..opts.steps {
            let mut next = Vec::new();
            for &k in &last {
                let rhs = d.matvec(&basis.q[k]);
                let (w, _) = solver.solve(&rhs, None)?;
                if basis.push(c, w) {
                    next.push(basis.q.len() - 1);
                }
            }
            if next.is_empty() {
                break;
            }
            last = next;
        }
        let dim = basis.q.len();
        if dim < want {
            return Err(Error::Eigen(format!(
                "Krylov space collapsed to dimension {dim} before {want} pairs were found"
            )));
        }
        let dq: Vec<Vec<T>> = basis.q.iter().map(|q| d.matvec(q)).collect();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = dot(&basis.q[i], &dq[j]).to_f64_lossy();
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let keep = block.min(dim);
        let mut thetas = Vec::with_capacity(keep);
        let mut vecs = Vec::with_capacity(keep);
        for &k in order.iter().take(keep) {
            let mut x = vec![T::zero(); n];
            for (j, q) in basis.q.iter().enumerate() {
                axpy(T::lit(eig.eigenvectors[(j, k)]), q, &mut x);
            }
            thetas.push(T::lit(eig.eigenvalues[k]));
            vecs.push(x);
        }
        let res: Vec<T> = (0..want).map(|k| residual(thetas[k], &vecs[k])).collect();
        worst = res.iter().fold(T::zero(), |m, &r| m.max(r));
        if worst <= opts.tol {
            thetas.truncate(want);
            vecs.truncate(want);
            return Ok((thetas, vecs, res));
        }
        start = vecs;
    }
    Err(Error::Eigen(format!(
        "no convergence after {} restarts (worst residual {:e})",
        opts.max_restarts,
        worst.to_f64_lossy()
    )))
}

fn m_normalize<T: Real>(m: &SparseMatrix<T>, v: &mut [T]) {
    let nrm = m.quadratic_form(v).max(T::zero()).sqrt();
    if nrm > T::zero() {
        v.iter_mut().for_each(|x| *x = *x / nrm);
    }
}

/// The `k` smallest eigenpairs of `S v = l M v` (`M` positive definite),
/// ascending with `M`-orthonormal vectors. Dense below `opts.dense_below`,
/// shift-invert block Krylov otherwise.
pub fn solve_eigen<T: Real>(
    s: &SparseMatrix<T>,
    m: &SparseMatrix<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<EigenPairs<T>> {
    let n = s.n();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "cannot compute {k} eigenpairs of a dimension-{n} problem"
        )));
    }
    if n < opts.dense_below {
        let mut all = dense_generalized(s, m)?;
        all.values.truncate(k);
        all.vectors.truncate(k);
        all.residuals.truncate(k);
        return Ok(all);
    }
    // shift below the spectrum so that S - sigma M is positive definite
    let mut last_err = None;
    for sigma in [0.0, -1.0, -10.0, -100.0, -1e3, -1e4] {
        let sigma = T::lit(sigma);
        let c = s.add_scaled(-sigma, m)?;
        let res = |theta: T, x: &[T]| pair_residual(s, m, sigma + T::one() / theta, x);
        match block_krylov_largest(&c, m, k, opts, &res) {
            Ok((thetas, vecs, residuals)) => {
                let mut pairs: Vec<(T, Vec<T>, T)> = thetas
                    .into_iter()
                    .zip(vecs)
                    .zip(residuals)
                    .map(|((t, mut v), r)| {
                        m_normalize(m, &mut v);
                        (sigma + T::one() / t, v, r)
                    })
                    .collect();
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
                return Ok(EigenPairs {
                    values: pairs.iter().map(|p| p.0).collect(),
                    residuals: pairs.iter().map(|p| p.2).collect(),
                    vectors: pairs.into_iter().map(|p| p.1).collect(),
                });
            }
            Err(e @ Error::NotPositiveDefinite { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Eigen(format!(
        "no shift made the pencil positive definite ({})",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// The `k` largest eigenpairs of `B v = mu A v` (`A` positive definite, `B`
/// positive semidefinite), descending, vectors `A`-normalized.
pub fn largest_generalized<T: Real>(
    b: &SparseMatrix<T>,
    a: &SparseMatrix<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<EigenPairs<T>> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "cannot compute {k} eigenpairs of a dimension-{n} problem"
        )));
    }
    if n < opts.dense_below {
        let mut all = dense_generalized(b, a)?;
        all.values.reverse();
        all.vectors.reverse();
        all.residuals.reverse();
        all.values.truncate(k);
        all.vectors.truncate(k);
        all.residuals.truncate(k);
        return Ok(all);
    }
    let res = |theta: T, x: &[T]| pair_residual(b, a, theta, x);
    let (values, vectors, residuals) = block_krylov_largest(a, b, k, opts, &res)?;
    Ok(EigenPairs {
        values,
        vectors,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_h1_operator, boundary_mass};
    use crate::mesh::Mesh;

    #[test]
    fn identical_pencil_has_unit_spectrum() {
        let ops = assemble_h1_operator(&Mesh::<f64>::unit_square(4)).unwrap();
        let e = solve_eigen(&ops.mass, &ops.mass, 5, &EigenOptions::default()).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn krylov_matches_dense() {
        let ops = assemble_h1_operator(&Mesh::<f64>::unit_square(12)).unwrap();
        let dense = solve_eigen(&ops.a, &ops.mass, 6, &EigenOptions::default()).unwrap();
        let opts = EigenOptions {
            dense_below: 0,
            ..Default::default()
        };
        let sparse = solve_eigen(&ops.a, &ops.mass, 6, &opts).unwrap();
        for (a, b) in dense.values.iter().zip(&sparse.values) {
            assert!((a - b).abs() < 1e-8 * a.abs(), "{a} vs {b}");
        }
        for (i, v) in sparse.vectors.iter().enumerate() {
            assert!(sparse.residuals[i] <= 1e-8);
            for (j, w) in sparse.vectors.iter().enumerate() {
                let g = ops.mass.bilinear(v, w);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-8, "M-gram ({i},{j}) = {g}");
            }
        }
        // the double eigenvalue 1 + pi^2 appears twice
        assert!((sparse.values[1] - sparse.values[2]).abs() < 1e-6 * sparse.values[1]);
    }

    #[test]
    fn largest_trace_eigenvalue_matches_dense() {
        let mesh = Mesh::<f64>::unit_square(12);
        let ops = assemble_h1_operator(&mesh).unwrap();
        let b = boundary_mass(&mesh, None, |_| 1.0);
        let dense = largest_generalized(&b, &ops.a, 2, &EigenOptions::default()).unwrap();
        let opts = EigenOptions {
            dense_below: 0,
            ..Default::default()
        };
        let sparse = largest_generalized(&b, &ops.a, 2, &opts).unwrap();
        for (a, b) in dense.values.iter().zip(&sparse.values) {
            assert!((a - b).abs() < 1e-8 * a, "{a} vs {b}");
        }
        assert!(dense.values[0] >= dense.values[1]);
    }
}
