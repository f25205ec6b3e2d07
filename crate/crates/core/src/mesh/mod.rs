//! Conforming triangulations of the fixed and perturbed domains with tagged
//! boundary edges and strip elements.

mod generate;
mod io;
mod locate;

pub use generate::{boundary_nodes, boundary_polyline, mesh_domain, MeshOptions};
pub use io::{read_mesh, write_mesh};
pub use locate::Locator;

use crate::error::{Error, Result};
use crate::scalar::{cross, dist, sub, Point, Real};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementTag {
    Interior,
    Strip,
}

/// Which part of the outer boundary an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    /// The (possibly oscillating) boundary traced by the chart line.
    Graph,
    /// Lateral sides `x' = -1` and `x' = 1`.
    Side,
    /// Bottom `s = -1`.
    Base,
}

impl ElementTag {
    pub fn name(self) -> &'static str {
        match self {
            ElementTag::Interior => "interior",
            ElementTag::Strip => "strip",
        }
    }
}

impl EdgeTag {
    pub fn name(self) -> &'static str {
        match self {
            EdgeTag::Graph => "graph",
            EdgeTag::Side => "side",
            EdgeTag::Base => "base",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T> {
    pub vertices: Vec<Point<T>>,
    /// Pullback `(x', s)` of every vertex through the fixed chart.
    pub chart_coords: Vec<Point<T>>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub element_tags: Vec<ElementTag>,
    pub boundary_edges: Vec<([usize; 2], EdgeTag)>,
    pub h: T,
    /// The `eps` this mesh realizes; zero for the fixed domain.
    pub eps: T,
}

/// Summary returned by [`Mesh::quality`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality<T> {
    pub min_angle_deg: T,
    pub max_aspect_ratio: T,
    pub elements: usize,
    pub strip_elements: usize,
    pub boundary_length: T,
    pub graph_length: T,
}

impl<T: Real> Mesh<T> {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        cross(sub(b, a), sub(c, a)) * T::lit(0.5)
    }

    pub fn area(&self) -> T {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn tagged_area(&self, tag: ElementTag) -> T {
        (0..self.n_triangles())
            .filter(|&t| self.element_tags[t] == tag)
            .map(|t| self.signed_area(t))
            .sum()
    }

    pub fn edge_length(&self, e: [usize; 2]) -> T {
        dist(self.vertices[e[0]], self.vertices[e[1]])
    }

    pub fn boundary_length(&self, tag: Option<EdgeTag>) -> T {
        self.boundary_edges
            .iter()
            .filter(|(_, t)| tag.is_none_or(|w| w == *t))
            .map(|(e, _)| self.edge_length(*e))
            .sum()
    }

    pub fn has_strip(&self) -> bool {
        self.element_tags.contains(&ElementTag::Strip)
    }

    /// Checks conformity, orientation, tag consistency and boundary-edge coverage.
    pub fn validate(&self) -> Result<()> {
        if self.chart_coords.len() != self.vertices.len() || self.element_tags.len() != self.triangles.len() {
            return Err(Error::Consistency("mesh array lengths disagree".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::Consistency(format!("triangle {t} has an invalid vertex")));
            }
            let a = self.signed_area(t);
            if !(a > T::zero()) {
                return Err(Error::DegenerateElement {
                    element: t,
                    area: a.to_f64_lossy(),
                });
            }
        }
        let counts = self.edge_counts();
        if let Some((e, n)) = counts.iter().find(|(_, &n)| n > 2) {
            return Err(Error::Consistency(format!("edge {:?} shared by {n} triangles", e)));
        }
        let mut boundary: Vec<[usize; 2]> = counts.iter().filter(|(_, &n)| n == 1).map(|(e, _)| *e).collect();
        let mut tagged: Vec<[usize; 2]> = self.boundary_edges.iter().map(|(e, _)| key(e[0], e[1])).collect();
        boundary.sort_unstable();
        tagged.sort_unstable();
        if boundary != tagged {
            return Err(Error::Consistency(format!(
                "{} topological boundary edges but {} tagged",
                boundary.len(),
                tagged.len()
            )));
        }
        Ok(())
    }

    /// Orients every tagged boundary edge along the counter-clockwise order of
    /// its adjacent triangle, so the domain lies to the left.
    pub(crate) fn orient_boundary_edges(&mut self) {
        let mut directed = HashMap::with_capacity(self.triangles.len() * 3);
        for tri in &self.triangles {
            for k in 0..3 {
                directed.insert([tri[k], tri[(k + 1) % 3]], ());
            }
        }
        for (e, _) in &mut self.boundary_edges {
            if !directed.contains_key(e) {
                e.swap(0, 1);
            }
        }
    }

    fn edge_counts(&self) -> HashMap<[usize; 2], usize> {
        let mut counts = HashMap::with_capacity(self.triangles.len() * 2);
        for tri in &self.triangles {
            for k in 0..3 {
                *counts.entry(key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn quality(&self) -> MeshQuality<T> {
        let mut min_angle = T::lit(180.0);
        let mut max_aspect = T::zero();
        for t in 0..self.n_triangles() {
            let p = self.corners(t);
            let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
            for k in 0..3 {
                let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
                let cosang = ((b * b + c * c - a * a) / (T::lit(2.0) * b * c))
                    .max(-T::one())
                    .min(T::one());
                let ang = cosang.acos().to_degrees();
                if ang < min_angle {
                    min_angle = ang;
                }
            }
            // longest edge over shortest altitude, normalized to 2/sqrt(3) for equilateral
            let longest = l[0].max(l[1]).max(l[2]);
            let alt = T::lit(2.0) * self.signed_area(t).abs() / longest;
            let aspect = longest / alt * T::lit(3f64.sqrt() / 2.0);
            if aspect > max_aspect {
                max_aspect = aspect;
            }
        }
        MeshQuality {
            min_angle_deg: min_angle,
            max_aspect_ratio: max_aspect,
            elements: self.n_triangles(),
            strip_elements: self.element_tags.iter().filter(|t| **t == ElementTag::Strip).count(),
            boundary_length: self.boundary_length(None),
            graph_length: self.boundary_length(Some(EdgeTag::Graph)),
        }
    }

    /// Restriction to the fixed domain: drops strip elements and renumbers.
    /// Returns the submesh and, for each of its vertices, the vertex index in `self`.
    pub fn restrict_to_base(&self) -> Result<(Mesh<T>, Vec<usize>)> {
        let n = self.n_vertices();
        let mut keep = vec![false; n];
        for (tri, tag) in self.triangles.iter().zip(&self.element_tags) {
            if *tag == ElementTag::Interior {
                for &v in tri {
                    keep[v] = true;
                }
            }
        }
        let mut new_index = vec![usize::MAX; n];
        let mut old_of_new = Vec::new();
        for v in 0..n {
            if keep[v] {
                new_index[v] = old_of_new.len();
                old_of_new.push(v);
            }
        }
        let triangles: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .zip(&self.element_tags)
            .filter(|(_, tag)| **tag == ElementTag::Interior)
            .map(|(t, _)| [new_index[t[0]], new_index[t[1]], new_index[t[2]]])
            .collect();
        let mut sub = Mesh {
            vertices: old_of_new.iter().map(|&v| self.vertices[v]).collect(),
            chart_coords: old_of_new.iter().map(|&v| self.chart_coords[v]).collect(),
            element_tags: vec![ElementTag::Interior; triangles.len()],
            triangles,
            boundary_edges: Vec::new(),
            h: self.h,
            eps: T::zero(),
        };
        sub.boundary_edges = sub.tag_boundary_from_chart()?;
        Ok((sub, old_of_new))
    }

    /// Finds topological boundary edges and tags them from chart coordinates.
    pub(crate) fn tag_boundary_from_chart(&self) -> Result<Vec<([usize; 2], EdgeTag)>> {
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut counts: HashMap<[usize; 2], (usize, [usize; 2])> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let e = [tri[k], tri[(k + 1) % 3]];
                let c = counts.entry(key(e[0], e[1])).or_insert((0, e));
                c.0 += 1;
            }
        }
        for (_, (n, e)) in counts {
            if n == 1 {
                edges.push(e);
            }
        }
        edges.sort_unstable();
        let one = T::one();
        edges
            .into_iter()
            .map(|e| {
                let (a, b) = (self.chart_coords[e[0]], self.chart_coords[e[1]]);
                let tag = if a[1] == T::zero() && b[1] == T::zero() {
                    EdgeTag::Graph
                } else if a[1] == -one && b[1] == -one {
                    EdgeTag::Base
                } else if a[0].abs() == one && b[0] == a[0] {
                    EdgeTag::Side
                } else {
                    return Err(Error::Geometry(format!(
                        "boundary edge {:?} not on a chart boundary line",
                        e
                    )));
                };
                Ok((e, tag))
            })
            .collect()
    }

    /// Uniform `nx x ny` rectangle `[x0, x1] x [y0, y1]` with alternating diagonals
    /// (union-jack pattern). Bottom edges are tagged `Base`, top `Graph`, sides `Side`.
    pub fn structured_rectangle(x0: T, y0: T, x1: T, y1: T, nx: usize, ny: usize) -> Self {
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = x0 + (x1 - x0) * T::from_count(i) / T::from_count(nx);
                let y = y0 + (y1 - y0) * T::from_count(j) / T::from_count(ny);
                vertices.push([x, y]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        let mut boundary_edges = Vec::new();
        for i in 0..nx {
            boundary_edges.push(([id(i, 0), id(i + 1, 0)], EdgeTag::Base));
            boundary_edges.push(([id(i + 1, ny), id(i, ny)], EdgeTag::Graph));
        }
        for j in 0..ny {
            boundary_edges.push(([id(nx, j), id(nx, j + 1)], EdgeTag::Side));
            boundary_edges.push(([id(0, j + 1), id(0, j)], EdgeTag::Side));
        }
        let h = ((x1 - x0) / T::from_count(nx)).max((y1 - y0) / T::from_count(ny));
        Mesh {
            chart_coords: vertices.clone(),
            vertices,
            element_tags: vec![ElementTag::Interior; triangles.len()],
            triangles,
            boundary_edges,
            h,
            eps: T::zero(),
        }
    }

    /// Unit square `[0, 1]^2` with `n x n` cells.
    pub fn unit_square(n: usize) -> Self {
        Self::structured_rectangle(T::zero(), T::zero(), T::one(), T::one(), n, n)
    }
}

#[inline]
pub(crate) fn key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}
