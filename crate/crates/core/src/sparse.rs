//! Compressed-row sparse matrices sharing one sparsity pattern per mesh.

use crate::error::{Error, Result};
use crate::scalar::Real;
use rayon::prelude::*;
use std::io::Write;
use std::sync::{Arc, OnceLock};

/// Row pointers and sorted column indices of a square matrix. A pattern built
/// from a mesh keeps the vertex coordinates, which give a better elimination
/// ordering for direct factorization than the graph alone.
#[derive(Clone, Debug)]
pub struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    coords: Option<Vec<[f64; 2]>>,
    ordering: OnceLock<Vec<usize>>,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.cols == other.cols
    }
}

impl Eq for Pattern {}

impl Pattern {
    /// Vertex adjacency of `mesh`, remembering its coordinates.
    pub fn from_mesh<T: Real>(mesh: &crate::mesh::Mesh<T>) -> Self {
        let mut p = Self::from_triangles(mesh.n_vertices(), &mesh.triangles);
        p.coords = Some(
            mesh.vertices
                .iter()
                .map(|v| [v[0].to_f64_lossy(), v[1].to_f64_lossy()])
                .collect(),
        );
        p
    }

    /// Fill-reducing elimination ordering `order[new] = old`, computed once.
    pub fn ordering(&self) -> &[usize] {
        self.ordering.get_or_init(|| match &self.coords {
            Some(c) => crate::solvers::coordinate_dissection(self, c),
            None => crate::solvers::nested_dissection(self),
        })
    }

    /// Pattern of the vertex adjacency of a triangulation (every vertex couples
    /// to itself and to each vertex it shares a triangle with).
    pub fn from_triangles(n: usize, triangles: &[[usize; 3]]) -> Self {
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in triangles {
            for &a in t {
                for &b in t {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        Self::from_rows(adj)
    }

    /// Pattern with the given (unsorted, possibly repeated) column lists per row.
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            coords: None,
            ordering: OnceLock::new(),
        }
    }

    pub fn dense(n: usize) -> Self {
        Self::from_rows((0..n).map(|_| (0..n).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry `(i, j)`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }
}

/// Square sparse matrix in compressed row storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    pattern: Arc<Pattern>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![T::zero(); pattern.nnz()];
        Self { pattern, values }
    }

    /// Builds a matrix from triplets; repeated entries are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::Consistency(format!(
                    "triplet ({i}, {j}) outside a {n} x {n} matrix"
                )));
            }
            rows[i].push(j);
        }
        let mut m = Self::zeros(Arc::new(Pattern::from_rows(rows)));
        for &(i, j, v) in triplets {
            m.add_to(i, j, v);
        }
        Ok(m)
    }

    pub fn from_dense(a: &[Vec<T>]) -> Self {
        let n = a.len();
        let mut m = Self::zeros(Arc::new(Pattern::dense(n)));
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.add_to(i, j, v);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(Arc::new(Pattern::from_rows((0..n).map(|i| vec![i]).collect())));
        for i in 0..n {
            m.add_to(i, i, T::one());
        }
        m
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry is outside the pattern.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .pattern
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] = self.values[k] + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.position(i, j).map_or(T::zero(), |k| self.values[k])
    }

    /// Iterates `(column, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (a, b) = (self.pattern.row_ptr[i], self.pattern.row_ptr[i + 1]);
        self.pattern.cols[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`. Rows are independent, so the parallel and sequential
    /// versions give identical results.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n());
        assert_eq!(y.len(), self.n());
        let p = &self.pattern;
        let row = |i: usize| {
            let mut acc = T::zero();
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc = acc + self.values[k] * x[p.cols[k]];
            }
            acc
        };
        if self.n() >= 20_000 {
            y.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
                for (o, yi) in chunk.iter_mut().enumerate() {
                    *yi = row(c * 4096 + o);
                }
            });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row(i);
            }
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let ay = self.matvec(y);
        x.iter().zip(&ay).fold(T::zero(), |s, (&a, &b)| s + a * b)
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        self.bilinear(x, x)
    }

    /// Sum of all entries (`1^T A 1`).
    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n()).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `self + alpha * other`, on the union of both patterns.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::Consistency(format!(
                "cannot add {} x {} and {} x {} matrices",
                self.n(),
                self.n(),
                other.n(),
                other.n()
            )));
        }
        if Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern {
            let values = self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + alpha * b)
                .collect();
            return Ok(Self {
                pattern: self.pattern.clone(),
                values,
            });
        }
        let rows = (0..self.n())
            .map(|i| {
                self.pattern
                    .row(i)
                    .iter()
                    .chain(other.pattern.row(i))
                    .copied()
                    .collect()
            })
            .collect();
        let mut m = Self::zeros(Arc::new(Pattern::from_rows(rows)));
        for i in 0..self.n() {
            for (j, v) in self.row(i) {
                m.add_to(i, j, v);
            }
            for (j, v) in other.row(i) {
                m.add_to(i, j, alpha * v);
            }
        }
        Ok(m)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|&v| alpha * v).collect(),
        }
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.n() {
            for (j, v) in self.row(i) {
                scale = scale.max(v.abs());
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.asymmetry() <= tol
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n()]; self.n()];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Writes `row col value` lines (zero-based indices), one stored entry per line.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# rows {} nnz {}", self.n(), self.nnz())?;
        for i in 0..self.n() {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
        Ok(())
    }
}
