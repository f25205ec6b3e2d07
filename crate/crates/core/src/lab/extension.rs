use std::collections::HashMap;

use crate::assembly::{Field, H1Operators};
use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::mesh::{Locator, Mesh};
use crate::scalar::{Point, Real};

#[derive(Clone, Copy, Debug)]
enum Source<T> {
    /// Vertex shared with the fixed-domain mesh.
    Vertex(usize),
    /// Barycentric evaluation in a fixed-domain triangle.
    Point(usize, [T; 3]),
}

/// `E_eps`: extension from the fixed domain to `Omega_eps` by even reflection
/// in chart coordinates. Fixed-domain vertices that also belong to the
/// perturbed mesh copy their value, so restriction after extension is the
/// identity there; strip vertices `(x', s)` take the value at `(x', -s)`.
pub struct Extension<'a, T> {
    limit: &'a Mesh<T>,
    sources: Vec<Source<T>>,
}

fn key<T: Real>(p: Point<T>) -> (u64, u64) {
    (p[0].to_f64_lossy().to_bits(), p[1].to_f64_lossy().to_bits())
}

impl<'a, T: Real> Extension<'a, T> {
    pub fn new(limit: &'a Mesh<T>, mesh_eps: &Mesh<T>, chart: &Chart<T>) -> Result<Self> {
        let shared: HashMap<(u64, u64), usize> = limit.vertices.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        let locator = Locator::new(limit);
        let sources = mesh_eps
            .vertices
            .iter()
            .zip(&mesh_eps.chart_coords)
            .map(|(&p, &c)| {
                if c[1] <= T::zero() {
                    if let Some(&i) = shared.get(&key(p)) {
                        return Ok(Source::Vertex(i));
                    }
                    let (t, b) = locator.locate_nearest(p);
                    return Ok(Source::Point(t, b));
                }
                let mirror = chart.forward([c[0], -c[1]]).map_err(|e| {
                    Error::Geometry(format!("reflection of strip vertex ({}, {}) failed: {e}", c[0], c[1]))
                })?;
                let (t, b) = locator.locate_nearest(mirror);
                Ok(Source::Point(t, b))
            })
            .collect::<Result<_>>()?;
        Ok(Self { limit, sources })
    }

    /// Vertex interpolant of the extended field on the perturbed mesh.
    pub fn apply(&self, u0: &Field<T>) -> Result<Field<T>> {
        if u0.len() != self.limit.n_vertices() {
            return Err(Error::Consistency(format!(
                "field has {} values for a fixed-domain mesh with {} vertices",
                u0.len(),
                self.limit.n_vertices()
            )));
        }
        let u = &u0.values;
        Ok(Field {
            values: self
                .sources
                .iter()
                .map(|s| match *s {
                    Source::Vertex(i) => u[i],
                    Source::Point(t, b) => {
                        let tri = self.limit.triangles[t];
                        b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]]
                    }
                })
                .collect(),
        })
    }
}

/// `E_eps u0` on `mesh_eps`.
pub fn extend<T: Real>(u0: &Field<T>, limit: &Mesh<T>, mesh_eps: &Mesh<T>, chart: &Chart<T>) -> Result<Field<T>> {
    Extension::new(limit, mesh_eps, chart)?.apply(u0)
}

/// `H^1` and `L^2` norms of a difference of two fields on one mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distance<T> {
    pub h1: T,
    pub l2: T,
}

impl<T: Real> Distance<T> {
    pub fn between(ops: &H1Operators<T>, a: &[T], b: &[T]) -> Result<Self> {
        if a.len() != b.len() || a.len() != ops.a.n() {
            return Err(Error::Consistency(format!(
                "fields of length {} and {} on a mesh with {} vertices",
                a.len(),
                b.len(),
                ops.a.n()
            )));
        }
        let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        Ok(Self {
            h1: ops.a.quadratic_form(&d).max(T::zero()).sqrt(),
            l2: ops.mass.quadratic_form(&d).max(T::zero()).sqrt(),
        })
    }
}

/// `|u_eps - E_eps u0|` in `H^1(Omega_eps)` and `L^2(Omega_eps)`.
pub fn h1_distance<T: Real>(
    u_eps: &Field<T>,
    mesh_eps: &Mesh<T>,
    u0: &Field<T>,
    limit: &Mesh<T>,
    chart: &Chart<T>,
) -> Result<Distance<T>> {
    if u_eps.len() != mesh_eps.n_vertices() {
        return Err(Error::Consistency(format!(
            "field has {} values for a perturbed mesh with {} vertices",
            u_eps.len(),
            mesh_eps.n_vertices()
        )));
    }
    let ext = extend(u0, limit, mesh_eps, chart)?;
    let ops = crate::assembly::assemble_h1_operator(mesh_eps)?;
    Distance::between(&ops, &u_eps.values, &ext.values)
}
