use super::cholesky::SparseCholesky;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Real};
use crate::sparse::SparseMatrix;

/// `z = P^{-1} r` for a symmetric positive definite approximation `P` of the operator.
pub trait Preconditioner<T>: Sync {
    fn apply(&self, r: &[T], z: &mut [T]);
}

pub struct Identity;

impl<T: Real> Preconditioner<T> for Identity {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi<T> {
    inv_diag: Vec<T>,
}

impl<T: Real> Jacobi<T> {
    pub fn new(a: &SparseMatrix<T>) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| {
                if d > T::zero() {
                    Ok(T::one() / d)
                } else {
                    Err(Error::NotPositiveDefinite {
                        iteration: 0,
                        curvature: d.to_f64_lossy(),
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl<T: Real> Preconditioner<T> for Jacobi<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for ((zi, &ri), &d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

/// Zero fill-in incomplete Cholesky factor `L L^T ~ A + shift diag(A)` on the
/// lower-triangular pattern of `A`. The shift grows from zero until every
/// pivot is positive.
pub struct IncompleteCholesky<T> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    pub shift: T,
}

impl<T: Real> IncompleteCholesky<T> {
    pub fn new(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.n();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut base = Vec::new();
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    cols.push(j);
                    base.push(v);
                }
            }
            row_ptr.push(cols.len());
            if cols.last() != Some(&i) {
                return Err(Error::NotPositiveDefinite {
                    iteration: 0,
                    curvature: 0.0,
                });
            }
        }
        let mut shift = T::zero();
        for _ in 0..40 {
            if let Some(vals) = Self::factor(n, &row_ptr, &cols, &base, shift) {
                return Ok(Self {
                    row_ptr,
                    cols,
                    vals,
                    shift,
                });
            }
            shift = if shift == T::zero() {
                T::lit(1e-3)
            } else {
                shift * T::lit(2.0)
            };
        }
        Err(Error::NotPositiveDefinite {
            iteration: 0,
            curvature: -1.0,
        })
    }

    fn factor(n: usize, row_ptr: &[usize], cols: &[usize], base: &[T], shift: T) -> Option<Vec<T>> {
        let mut l = base.to_vec();
        for i in 0..n {
            let (ri, re) = (row_ptr[i], row_ptr[i + 1]);
            for p in ri..re - 1 {
                let k = cols[p];
                // sum_{j < k} L_ij L_kj over the common pattern
                let (mut a, mut b) = (ri, row_ptr[k]);
                let (ae, be) = (p, row_ptr[k + 1] - 1);
                let mut s = T::zero();
                while a < ae && b < be {
                    match cols[a].cmp(&cols[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            s = s + l[a] * l[b];
                            a += 1;
                            b += 1;
                        }
                    }
                }
                l[p] = (l[p] - s) / l[row_ptr[k + 1] - 1];
            }
            let d = re - 1;
            let s = (ri..d).fold(T::zero(), |s, p| s + l[p] * l[p]);
            let pivot = base[d] * (T::one() + shift) - s;
            if !(pivot > T::epsilon() * base[d].abs()) {
                return None;
            }
            l[d] = pivot.sqrt();
        }
        Some(l)
    }
}

impl<T: Real> Preconditioner<T> for IncompleteCholesky<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let n = r.len();
        for i in 0..n {
            let (a, d) = (self.row_ptr[i], self.row_ptr[i + 1] - 1);
            let mut s = r[i];
            for p in a..d {
                s = s - self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.vals[d];
        }
        for i in (0..n).rev() {
            let (a, d) = (self.row_ptr[i], self.row_ptr[i + 1] - 1);
            z[i] = z[i] / self.vals[d];
            let zi = z[i];
            for p in a..d {
                let j = self.cols[p];
                z[j] = z[j] - self.vals[p] * zi;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionerKind {
    None,
    Jacobi,
    IncompleteCholesky,
}

impl PreconditionerKind {
    pub fn build<T: Real>(self, a: &SparseMatrix<T>) -> Result<Box<dyn Preconditioner<T>>> {
        Ok(match self {
            PreconditionerKind::None => Box::new(Identity),
            PreconditionerKind::Jacobi => Box::new(Jacobi::new(a)?),
            PreconditionerKind::IncompleteCholesky => Box::new(IncompleteCholesky::new(a)?),
        })
    }
}

/// How `SpdSolver` handles repeated solves with one operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearMethod {
    /// Preconditioned conjugate gradients.
    Cg,
    /// Sparse Cholesky factorization, computed once.
    Cholesky,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOptions<T> {
    /// Relative residual target `|b - A x| <= tol |b|`.
    pub tol: T,
    /// Iteration cap; `None` means ten times the dimension.
    pub max_iterations: Option<usize>,
    pub preconditioner: PreconditionerKind,
    pub method: LinearMethod,
}

impl<T: Real> Default for CgOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::tol(1e-10, 10.0),
            max_iterations: None,
            preconditioner: PreconditionerKind::IncompleteCholesky,
            method: LinearMethod::Cg,
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<T> {
    pub iterations: usize,
    pub residual: T,
    pub converged: bool,
    /// Residual norms per iteration.
    pub history: Vec<T>,
    /// Damping factors of accepted nonlinear steps (empty for linear solves).
    pub damping: Vec<T>,
    /// Index into `history` where Newton took over, if it did.
    pub newton_start: Option<usize>,
}

/// Preconditioned conjugate gradients from `x0` (zero when `None`).
pub fn pcg<T: Real>(
    a: &SparseMatrix<T>,
    b: &[T],
    x0: Option<&[T]>,
    pre: &dyn Preconditioner<T>,
    opts: &CgOptions<T>,
) -> Result<(Vec<T>, SolveReport<T>)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::Consistency(format!(
            "right-hand side has {} entries for dimension {n}",
            b.len()
        )));
    }
    let max_it = opts.max_iterations.unwrap_or(10 * n.max(1));
    let bnorm = norm2(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![T::zero(); n],
    };
    let mut history = Vec::new();
    if bnorm == T::zero() {
        return Ok((
            vec![T::zero(); n],
            SolveReport {
                iterations: 0,
                residual: T::zero(),
                converged: true,
                history,
                damping: Vec::new(),
                newton_start: None,
            },
        ));
    }
    let mut r = a.matvec(&x);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = norm2(&r) / bnorm;
    history.push(rel);
    let mut z = vec![T::zero(); n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    let mut it = 0;
    while rel > opts.tol {
        if it >= max_it {
            return Err(Error::SolverNonConvergence {
                iterations: it,
                residual: rel.to_f64_lossy(),
                history: history.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        a.matvec_into(&p, &mut ap);
        let curv = dot(&p, &ap);
        if !(curv > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                iteration: it,
                curvature: curv.to_f64_lossy(),
            });
        }
        let alpha = rz / curv;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        it += 1;
        rel = norm2(&r) / bnorm;
        history.push(rel);
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok((
        x,
        SolveReport {
            iterations: it,
            residual: rel,
            converged: true,
            history,
            damping: Vec::new(),
            newton_start: None,
        },
    ))
}

/// Solves `A x = b` for symmetric positive definite `A` with IC(0)-preconditioned CG.
pub fn solve_spd<T: Real>(a: &SparseMatrix<T>, b: &[T], tol: T) -> Result<Vec<T>> {
    let opts = CgOptions {
        tol,
        ..CgOptions::default()
    };
    let pre = opts.preconditioner.build(a)?;
    Ok(pcg(a, b, None, pre.as_ref(), &opts)?.0)
}

enum Factor<T> {
    Iterative(Box<dyn Preconditioner<T>>),
    Direct(SparseCholesky<T>),
}

/// A factorization (complete, or an incomplete one used as preconditioner)
/// kept for repeated solves with one operator.
pub struct SpdSolver<'a, T> {
    pub a: &'a SparseMatrix<T>,
    factor: Factor<T>,
    pub opts: CgOptions<T>,
}

impl<'a, T: Real> SpdSolver<'a, T> {
    pub fn new(a: &'a SparseMatrix<T>, opts: CgOptions<T>) -> Result<Self> {
        let factor = match opts.method {
            LinearMethod::Cg => Factor::Iterative(opts.preconditioner.build(a)?),
            LinearMethod::Cholesky => Factor::Direct(SparseCholesky::new(a)?),
        };
        Ok(Self { a, factor, opts })
    }

    pub fn solve(&self, b: &[T], x0: Option<&[T]>) -> Result<(Vec<T>, SolveReport<T>)> {
        match &self.factor {
            Factor::Iterative(pre) => pcg(self.a, b, x0, pre.as_ref(), &self.opts),
            Factor::Direct(chol) => {
                let x = chol.solve(b);
                let mut r = self.a.matvec(&x);
                for (ri, &bi) in r.iter_mut().zip(b) {
                    *ri = bi - *ri;
                }
                let bnorm = norm2(b);
                let rel = if bnorm > T::zero() {
                    norm2(&r) / bnorm
                } else {
                    T::zero()
                };
                Ok((
                    x,
                    SolveReport {
                        iterations: 1,
                        residual: rel,
                        converged: rel <= self.opts.tol.max(T::epsilon().sqrt()),
                        history: vec![rel],
                        damping: Vec::new(),
                        newton_start: None,
                    },
                ))
            }
        }
    }
}
