//! Piecewise-linear finite-element forms: the `H^1` operator, the concentrated
//! strip load, boundary loads for the perturbed and the limit problem, and
//! their linearizations.

use std::sync::Arc;

use rayon::prelude::*;

use crate::coefficients::BoundaryCoefficients;
use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::mesh::{EdgeTag, ElementTag, Mesh};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::scalar::{dist, Point, Real};
use crate::sparse::{Pattern, SparseMatrix};

/// Nodal values of a piecewise-linear function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub values: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Checks the length against the mesh.
    pub fn on(mesh: &Mesh<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Consistency(format!(
                "field has {} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(mesh: &Mesh<T>) -> Self {
        Self::constant(mesh, T::zero())
    }

    pub fn constant(mesh: &Mesh<T>, c: T) -> Self {
        Self {
            values: vec![c; mesh.n_vertices()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh<T>, f: impl Fn(Point<T>) -> T) -> Self {
        Self {
            values: mesh.vertices.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn h1_norm(&self, ops: &H1Operators<T>) -> T {
        ops.a.quadratic_form(&self.values).max(T::zero()).sqrt()
    }

    pub fn l2_norm(&self, ops: &H1Operators<T>) -> T {
        ops.mass.quadratic_form(&self.values).max(T::zero()).sqrt()
    }
}

/// Stiffness, mass and their sum `A` on one shared sparsity pattern.
#[derive(Clone, Debug)]
pub struct H1Operators<T> {
    pub stiffness: SparseMatrix<T>,
    pub mass: SparseMatrix<T>,
    pub a: SparseMatrix<T>,
}

/// Stiffness, mass and area of one triangle.
pub type ElementMatrices<T> = ([[T; 3]; 3], [[T; 3]; 3], T);

/// Element stiffness and mass of a linear triangle.
pub fn element_matrices<T: Real>(p: [Point<T>; 3]) -> Option<ElementMatrices<T>> {
    let two = T::lit(2.0);
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = det.abs() / two;
    let longest = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
    if !(area > T::epsilon() * T::lit(16.0) * longest * longest) {
        return None;
    }
    // gradients of the barycentric coordinates times det
    let g = [
        [p[1][1] - p[2][1], p[2][0] - p[1][0]],
        [p[2][1] - p[0][1], p[0][0] - p[2][0]],
        [p[0][1] - p[1][1], p[1][0] - p[0][0]],
    ];
    let mut k = [[T::zero(); 3]; 3];
    let mut m = [[T::zero(); 3]; 3];
    let kscale = T::one() / (T::lit(4.0) * area);
    let mscale = area / T::lit(12.0);
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) * kscale;
            m[i][j] = if i == j { mscale * two } else { mscale };
        }
    }
    Some((k, m, area))
}

/// Assembles stiffness and mass exactly. Element matrices are computed in
/// parallel and summed in element order, so the result does not depend on
/// the thread count.
pub fn assemble_h1_operator<T: Real>(mesh: &Mesh<T>) -> Result<H1Operators<T>> {
    let pattern = Arc::new(Pattern::from_mesh(mesh));
    let locals: Vec<_> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| element_matrices(mesh.corners(t)))
        .collect();
    let mut stiffness = SparseMatrix::zeros(pattern.clone());
    let mut mass = SparseMatrix::zeros(pattern);
    for (t, local) in locals.into_iter().enumerate() {
        let Some((k, m, _)) = local else {
            return Err(Error::DegenerateElement {
                element: t,
                area: mesh.signed_area(t).to_f64_lossy(),
            });
        };
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                stiffness.add_to(tri[i], tri[j], k[i][j]);
                mass.add_to(tri[i], tri[j], m[i][j]);
            }
        }
    }
    let a = stiffness.add_scaled(T::one(), &mass)?;
    Ok(H1Operators { stiffness, mass, a })
}

/// A triangle quadrature point with its shape-function values.
#[derive(Clone, Copy, Debug)]
pub(crate) struct VolumePoint<T> {
    pub nodes: [usize; 3],
    pub shape: [T; 3],
    pub weight: T,
    pub x: Point<T>,
}

/// An edge quadrature point; `beta` and `gamma` are the limit coefficients there.
#[derive(Clone, Copy, Debug)]
pub(crate) struct EdgePoint<T> {
    pub nodes: [usize; 2],
    pub shape: [T; 2],
    pub weight: T,
    pub x: Point<T>,
    pub beta: T,
    pub gamma: T,
}

fn strip_points<T: Real>(mesh: &Mesh<T>) -> Vec<VolumePoint<T>> {
    let rule = triangle_rule::<T>();
    let mut out = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.element_tags[t] != ElementTag::Strip {
            continue;
        }
        let p = mesh.corners(t);
        let area = mesh.signed_area(t).abs();
        for (bary, w) in rule {
            let x = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            out.push(VolumePoint {
                nodes: *tri,
                shape: bary,
                weight: w * area,
                x,
            });
        }
    }
    out
}

fn edge_points<T: Real>(mesh: &Mesh<T>, keep: impl Fn(EdgeTag) -> bool) -> Vec<(EdgePoint<T>, EdgeTag)> {
    let rule = edge_rule::<T>();
    let mut out = Vec::new();
    for &(e, tag) in &mesh.boundary_edges {
        if !keep(tag) {
            continue;
        }
        let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
        let len = dist(a, b);
        for (t, w) in rule {
            let s = T::one() - t;
            out.push((
                EdgePoint {
                    nodes: e,
                    shape: [s, t],
                    weight: w * len,
                    x: [s * a[0] + t * b[0], s * a[1] + t * b[1]],
                    beta: T::zero(),
                    gamma: T::one(),
                },
                tag,
            ));
        }
    }
    out
}

fn check_eps<T: Real>(mesh: &Mesh<T>, eps: T) -> Result<()> {
    if !(eps > T::zero()) {
        return Err(Error::Domain(format!("eps = {eps} must be positive")));
    }
    let tol = T::epsilon().sqrt() * eps;
    if (mesh.eps - eps).abs() > tol {
        return Err(Error::Consistency(format!(
            "mesh was generated for eps = {} but eps = {} was requested",
            mesh.eps, eps
        )));
    }
    Ok(())
}

fn check_field<T: Real>(mesh: &Mesh<T>, u: &[T]) -> Result<()> {
    if u.len() != mesh.n_vertices() {
        return Err(Error::Consistency(format!(
            "field has {} values for {} vertices",
            u.len(),
            mesh.n_vertices()
        )));
    }
    Ok(())
}

fn volume_load<T: Real>(n: usize, pts: &[VolumePoint<T>], u: &[T], scale: T, f: impl Fn(Point<T>, T) -> T) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for q in pts {
        let uq = (0..3).fold(T::zero(), |s, i| s + q.shape[i] * u[q.nodes[i]]);
        let v = f(q.x, uq) * q.weight * scale;
        for i in 0..3 {
            out[q.nodes[i]] = out[q.nodes[i]] + v * q.shape[i];
        }
    }
    out
}

fn edge_load<T: Real>(n: usize, pts: &[EdgePoint<T>], u: &[T], f: impl Fn(&EdgePoint<T>, T) -> T) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for q in pts {
        let uq = q.shape[0] * u[q.nodes[0]] + q.shape[1] * u[q.nodes[1]];
        let v = f(q, uq) * q.weight;
        for i in 0..2 {
            out[q.nodes[i]] = out[q.nodes[i]] + v * q.shape[i];
        }
    }
    out
}

fn volume_mass<T: Real>(
    pattern: &Arc<Pattern>,
    pts: &[VolumePoint<T>],
    scale: T,
    weight: impl Fn(&VolumePoint<T>) -> T,
) -> SparseMatrix<T> {
    let mut m = SparseMatrix::zeros(pattern.clone());
    for q in pts {
        let w = weight(q) * q.weight * scale;
        for i in 0..3 {
            for j in 0..3 {
                m.add_to(q.nodes[i], q.nodes[j], w * q.shape[i] * q.shape[j]);
            }
        }
    }
    m
}

fn edge_mass<T: Real>(
    pattern: &Arc<Pattern>,
    pts: &[EdgePoint<T>],
    weight: impl Fn(&EdgePoint<T>) -> T,
) -> SparseMatrix<T> {
    let mut m = SparseMatrix::zeros(pattern.clone());
    for q in pts {
        let w = weight(q) * q.weight;
        for i in 0..2 {
            for j in 0..2 {
                m.add_to(q.nodes[i], q.nodes[j], w * q.shape[i] * q.shape[j]);
            }
        }
    }
    m
}

/// `(1/eps) int_{omega_eps} f(x, u) phi_j` over the strip elements.
pub fn assemble_concentrated_term<T: Real>(mesh: &Mesh<T>, nl: &Nonlinearity<T>, u: &[T], eps: T) -> Result<Vec<T>> {
    check_eps(mesh, eps)?;
    check_field(mesh, u)?;
    Ok(volume_load(
        mesh.n_vertices(),
        &strip_points(mesh),
        u,
        T::one() / eps,
        |x, v| nl.f(x, v),
    ))
}

/// `int_{boundary} g(x, u) phi_j` over the whole boundary. Enters the load
/// with a minus sign.
pub fn assemble_boundary_term<T: Real>(mesh: &Mesh<T>, nl: &Nonlinearity<T>, u: &[T]) -> Result<Vec<T>> {
    check_field(mesh, u)?;
    let pts: Vec<_> = edge_points(mesh, |_| true).into_iter().map(|(q, _)| q).collect();
    Ok(edge_load(mesh.n_vertices(), &pts, u, |q, v| nl.g(q.x, v)))
}

/// Edge quadrature on the limit mesh with `beta` and `gamma` evaluated once
/// through the chart pullback; sides and base carry `beta = 0`, `gamma = 1`.
#[derive(Clone, Debug)]
pub struct LimitBoundary<T> {
    pub(crate) points: Vec<EdgePoint<T>>,
}

impl<T: Real> LimitBoundary<T> {
    pub fn new(mesh: &Mesh<T>, chart: &Chart<T>, coeffs: &dyn BoundaryCoefficients<T>) -> Result<Self> {
        let mut points = Vec::new();
        for (mut q, tag) in edge_points(mesh, |_| true) {
            if tag == EdgeTag::Graph {
                let xc = chart.inverse(q.x)?;
                q.beta = coeffs.beta(xc[0])?;
                q.gamma = coeffs.gamma(xc[0])?;
            }
            points.push(q);
        }
        Ok(Self { points })
    }
}

/// `int_{boundary} (beta f(x, u) - gamma g(x, u)) phi_j` on the limit mesh.
pub fn assemble_limit_boundary_term<T: Real>(
    mesh0: &Mesh<T>,
    boundary: &LimitBoundary<T>,
    nl: &Nonlinearity<T>,
    u: &[T],
) -> Result<Vec<T>> {
    if mesh0.eps != T::zero() {
        return Err(Error::Consistency(format!(
            "limit terms need an unperturbed mesh, got eps = {}",
            mesh0.eps
        )));
    }
    check_field(mesh0, u)?;
    Ok(edge_load(mesh0.n_vertices(), &boundary.points, u, |q, v| {
        q.beta * nl.f(q.x, v) - q.gamma * nl.g(q.x, v)
    }))
}

/// `(1/eps) int_{omega_eps} V phi_i phi_j`.
pub fn strip_mass<T: Real>(mesh: &Mesh<T>, eps: T, potential: impl Fn(Point<T>) -> T) -> Result<SparseMatrix<T>> {
    check_eps(mesh, eps)?;
    let pattern = Arc::new(Pattern::from_mesh(mesh));
    Ok(volume_mass(&pattern, &strip_points(mesh), T::one() / eps, |q| {
        potential(q.x)
    }))
}

/// `int_{boundary} V phi_i phi_j`, restricted to edges with one of `tags` (all when `None`).
pub fn boundary_mass<T: Real>(
    mesh: &Mesh<T>,
    tags: Option<&[EdgeTag]>,
    potential: impl Fn(Point<T>) -> T,
) -> SparseMatrix<T> {
    let pattern = Arc::new(Pattern::from_mesh(mesh));
    let pts: Vec<_> = edge_points(mesh, |t| tags.is_none_or(|ts| ts.contains(&t)))
        .into_iter()
        .map(|(q, _)| q)
        .collect();
    edge_mass(&pattern, &pts, |q| potential(q.x))
}

/// A discretized problem `A u = h(u)` as seen by the solvers.
pub trait DiscreteProblem<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn operators(&self) -> &H1Operators<T>;
    /// `h(u)`.
    fn load(&self, u: &[T]) -> Result<Vec<T>>;
    /// `Dh(u)`; symmetric.
    fn load_derivative(&self, u: &[T]) -> Result<SparseMatrix<T>>;

    /// `A - Dh(u)`.
    fn linearization(&self, u: &[T]) -> Result<SparseMatrix<T>> {
        self.operators().a.add_scaled(-T::one(), &self.load_derivative(u)?)
    }

    /// `A u - h(u)`.
    fn residual(&self, u: &[T]) -> Result<Vec<T>> {
        let mut r = self.operators().a.matvec(u);
        for (ri, hi) in r.iter_mut().zip(self.load(u)?) {
            *ri = *ri - hi;
        }
        Ok(r)
    }
}

/// `-Laplace u + u = (1/eps) chi_strip f(x, u)` with `du/dn + g(x, u) = 0` on the oscillating domain.
pub struct PerturbedProblem<'a, T> {
    pub mesh: &'a Mesh<T>,
    pub nl: &'a Nonlinearity<T>,
    pub eps: T,
    ops: H1Operators<T>,
    strip: Vec<VolumePoint<T>>,
    edges: Vec<EdgePoint<T>>,
}

impl<'a, T: Real> PerturbedProblem<'a, T> {
    pub fn new(mesh: &'a Mesh<T>, nl: &'a Nonlinearity<T>, eps: T) -> Result<Self> {
        check_eps(mesh, eps)?;
        Ok(Self {
            ops: assemble_h1_operator(mesh)?,
            strip: strip_points(mesh),
            edges: edge_points(mesh, |_| true).into_iter().map(|(q, _)| q).collect(),
            mesh,
            nl,
            eps,
        })
    }

    /// `(1/eps) int_{omega_eps} f(x, u) phi_j`.
    pub fn concentrated(&self, u: &[T]) -> Vec<T> {
        volume_load(self.dim(), &self.strip, u, T::one() / self.eps, |x, v| self.nl.f(x, v))
    }

    /// `int_{boundary} g(x, u) phi_j`.
    pub fn boundary(&self, u: &[T]) -> Vec<T> {
        edge_load(self.dim(), &self.edges, u, |q, v| self.nl.g(q.x, v))
    }
}

impl<T: Real> DiscreteProblem<T> for PerturbedProblem<'_, T> {
    fn dim(&self) -> usize {
        self.mesh.n_vertices()
    }

    fn operators(&self) -> &H1Operators<T> {
        &self.ops
    }

    fn load(&self, u: &[T]) -> Result<Vec<T>> {
        check_field(self.mesh, u)?;
        let mut h = self.concentrated(u);
        for (hi, gi) in h.iter_mut().zip(self.boundary(u)) {
            *hi = *hi - gi;
        }
        Ok(h)
    }

    fn load_derivative(&self, u: &[T]) -> Result<SparseMatrix<T>> {
        check_field(self.mesh, u)?;
        let p = self.ops.a.pattern();
        let at = |nodes: &[usize], shape: &[T]| nodes.iter().zip(shape).fold(T::zero(), |s, (&n, &w)| s + w * u[n]);
        let fu = volume_mass(p, &self.strip, T::one() / self.eps, |q| {
            self.nl.f_u(q.x, at(&q.nodes, &q.shape))
        });
        let gu = edge_mass(p, &self.edges, |q| self.nl.g_u(q.x, at(&q.nodes, &q.shape)));
        fu.add_scaled(-T::one(), &gu)
    }
}

/// `-Laplace u + u = 0` with `du/dn + gamma g(x, u) = beta f(x, u)` on the fixed domain.
pub struct LimitProblem<'a, T> {
    pub mesh: &'a Mesh<T>,
    pub nl: &'a Nonlinearity<T>,
    ops: H1Operators<T>,
    boundary: LimitBoundary<T>,
}

impl<'a, T: Real> LimitProblem<'a, T> {
    pub fn new(
        mesh: &'a Mesh<T>,
        chart: &Chart<T>,
        coeffs: &dyn BoundaryCoefficients<T>,
        nl: &'a Nonlinearity<T>,
    ) -> Result<Self> {
        if mesh.eps != T::zero() {
            return Err(Error::Consistency(format!(
                "limit problem needs an unperturbed mesh, got eps = {}",
                mesh.eps
            )));
        }
        Ok(Self {
            ops: assemble_h1_operator(mesh)?,
            boundary: LimitBoundary::new(mesh, chart, coeffs)?,
            mesh,
            nl,
        })
    }

    pub fn boundary_data(&self) -> &LimitBoundary<T> {
        &self.boundary
    }
}

impl<T: Real> DiscreteProblem<T> for LimitProblem<'_, T> {
    fn dim(&self) -> usize {
        self.mesh.n_vertices()
    }

    fn operators(&self) -> &H1Operators<T> {
        &self.ops
    }

    fn load(&self, u: &[T]) -> Result<Vec<T>> {
        assemble_limit_boundary_term(self.mesh, &self.boundary, self.nl, u)
    }

    fn load_derivative(&self, u: &[T]) -> Result<SparseMatrix<T>> {
        check_field(self.mesh, u)?;
        Ok(edge_mass(self.ops.a.pattern(), &self.boundary.points, |q| {
            let v = q.shape[0] * u[q.nodes[0]] + q.shape[1] * u[q.nodes[1]];
            q.beta * self.nl.f_u(q.x, v) - q.gamma * self.nl.g_u(q.x, v)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::EffectiveCoefficients;
    use crate::nonlinearity::Reaction;

    fn reference_triangle() -> Mesh<f64> {
        let mut m = Mesh::unit_square(1);
        m.vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        m.chart_coords = m.vertices.clone();
        m.triangles = vec![[0, 1, 2]];
        m.element_tags = vec![ElementTag::Interior];
        m.boundary_edges = vec![
            ([0, 1], EdgeTag::Base),
            ([1, 2], EdgeTag::Side),
            ([2, 0], EdgeTag::Side),
        ];
        m
    }

    #[test]
    fn reference_element_matrices() {
        let ops = assemble_h1_operator(&reference_triangle()).unwrap();
        let k = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let m = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((ops.stiffness.get(i, j) - k[i][j]).abs() < 1e-15);
                assert!((ops.mass.get(i, j) - m[i][j] / 24.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_field_quadratic_form_is_area() {
        let mesh = Mesh::structured_rectangle(-1.0, -1.0, 1.0, 0.0, 7, 5);
        let ops = assemble_h1_operator(&mesh).unwrap();
        let u = Field::constant(&mesh, 3.0);
        assert!((ops.a.quadratic_form(&u.values) - 18.0f64).abs() < 1e-12);
        assert!(ops.a.is_symmetric(1e-12));
    }

    #[test]
    fn degenerate_element_is_named() {
        let mut m = reference_triangle();
        m.vertices[2] = [2.0, 0.0];
        match assemble_h1_operator(&m) {
            Err(Error::DegenerateElement { element, .. }) => assert_eq!(element, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_term_partition_of_unity() {
        let mesh = Mesh::unit_square(4);
        let one = Nonlinearity::new(Reaction::zero(), Reaction::constant(1.0), 10.0);
        let b = assemble_boundary_term(&mesh, &one, &vec![0.0; mesh.n_vertices()]).unwrap();
        assert!((b.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        let lin = Nonlinearity::new(Reaction::zero(), Reaction::affine(1.0, 0.0), 10.0);
        let b = assemble_boundary_term(&mesh, &lin, &vec![0.5; mesh.n_vertices()]).unwrap();
        assert!((b.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn limit_term_with_unit_gamma_is_minus_boundary_term() {
        let mesh = Mesh::structured_rectangle(-1.0, -1.0, 1.0, 0.0, 6, 3);
        let nl = Nonlinearity::new(Reaction::constant(1.0), Reaction::affine(1.0, 0.25), 10.0);
        let u: Vec<f64> = mesh.vertices.iter().map(|p| p[0] * p[1]).collect();
        let bd = LimitBoundary::new(&mesh, &Chart::FlatStrip, &EffectiveCoefficients::constant(0.0, 1.0)).unwrap();
        let lim = assemble_limit_boundary_term(&mesh, &bd, &nl, &u).unwrap();
        let b = assemble_boundary_term(&mesh, &nl, &u).unwrap();
        for (l, b) in lim.iter().zip(&b) {
            assert!((l + b).abs() < 1e-14);
        }
    }

    #[test]
    fn eps_mismatch_is_a_consistency_error() {
        let mesh = Mesh::unit_square(2);
        let nl = Nonlinearity::zero();
        assert!(matches!(
            assemble_concentrated_term(&mesh, &nl, &[0.0; 9], 0.1),
            Err(Error::Consistency(_))
        ));
    }
}
