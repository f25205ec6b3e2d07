use super::Mesh;
use crate::scalar::{cross, sub, Point, Real};

/// Bucket-grid point location on the physical triangulation.
pub struct Locator<'a, T> {
    mesh: &'a Mesh<T>,
    origin: Point<T>,
    cell: T,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a, T: Real> Locator<'a, T> {
    pub fn new(mesh: &'a Mesh<T>) -> Self {
        let mut lo = [T::infinity(), T::infinity()];
        let mut hi = [T::neg_infinity(), T::neg_infinity()];
        for p in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let nt = mesh.n_triangles().max(1);
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(T::min_positive_value());
        let cell = (area / T::from_count(nt)).sqrt().max(T::lit(1e-12)) * T::lit(2.0);
        let nx = ((hi[0] - lo[0]) / cell).ceil().to_usize().unwrap_or(1).max(1);
        let ny = ((hi[1] - lo[1]) / cell).ceil().to_usize().unwrap_or(1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let clampi = |v: T, n: usize| v.to_isize().unwrap_or(0).clamp(0, n as isize - 1) as usize;
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let (mut a, mut b) = (c[0], c[0]);
            for p in &c[1..] {
                for k in 0..2 {
                    a[k] = a[k].min(p[k]);
                    b[k] = b[k].max(p[k]);
                }
            }
            let i0 = clampi(((a[0] - lo[0]) / cell).floor(), nx);
            let i1 = clampi(((b[0] - lo[0]) / cell).floor(), nx);
            let j0 = clampi(((a[1] - lo[1]) / cell).floor(), ny);
            let j1 = clampi(((b[1] - lo[1]) / cell).floor(), ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self {
            mesh,
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    pub fn mesh(&self) -> &Mesh<T> {
        self.mesh
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point<T>) -> [T; 3] {
        let c = self.mesh.corners(t);
        let det = cross(sub(c[1], c[0]), sub(c[2], c[0]));
        let l1 = cross(sub(p, c[0]), sub(c[2], c[0])) / det;
        let l2 = cross(sub(c[1], c[0]), sub(p, c[0])) / det;
        [T::one() - l1 - l2, l1, l2]
    }

    fn bucket_of(&self, p: Point<T>) -> (isize, isize) {
        (
            ((p[0] - self.origin[0]) / self.cell).floor().to_isize().unwrap_or(-1),
            ((p[1] - self.origin[1]) / self.cell).floor().to_isize().unwrap_or(-1),
        )
    }

    /// Triangle containing `p` with its barycentric coordinates, or `None` if
    /// `p` lies outside the mesh (up to a small tolerance).
    pub fn locate(&self, p: Point<T>) -> Option<(usize, [T; 3])> {
        let tol = T::lit(-1e-10).max(-T::epsilon() * T::lit(64.0));
        let (i, j) = self.bucket_of(p);
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let mut best: Option<(usize, [T; 3], T)> = None;
        for &t in &self.buckets[j as usize * self.nx + i as usize] {
            let b = self.barycentric(t, p);
            let m = b[0].min(b[1]).min(b[2]);
            if m >= T::zero() {
                return Some((t, b));
            }
            if m >= tol && best.is_none_or(|(_, _, bm)| m > bm) {
                best = Some((t, b, m));
            }
        }
        best.map(|(t, b, _)| (t, b))
    }

    /// Like [`Locator::locate`] but falls back to the nearest nearby triangle with
    /// clamped barycentric coordinates for points just outside the mesh.
    pub fn locate_nearest(&self, p: Point<T>) -> (usize, [T; 3]) {
        if let Some(r) = self.locate(p) {
            return r;
        }
        let (ci, cj) = self.bucket_of(p);
        let mut best: Option<(usize, [T; 3], T)> = None;
        let mut radius = 1isize;
        while best.is_none() && radius <= (self.nx.max(self.ny) as isize + 1) {
            for j in cj - radius..=cj + radius {
                for i in ci - radius..=ci + radius {
                    if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
                        continue;
                    }
                    for &t in &self.buckets[j as usize * self.nx + i as usize] {
                        let b = self.barycentric(t, p);
                        let m = b[0].min(b[1]).min(b[2]);
                        if best.is_none_or(|(_, _, bm)| m > bm) {
                            best = Some((t, b, m));
                        }
                    }
                }
            }
            radius += 1;
        }
        let (t, b, _) = best.expect("mesh has at least one triangle");
        let c = [b[0].max(T::zero()), b[1].max(T::zero()), b[2].max(T::zero())];
        let s = c[0] + c[1] + c[2];
        (t, [c[0] / s, c[1] / s, c[2] / s])
    }

    /// Evaluates a P1 field at `p`.
    pub fn evaluate(&self, values: &[T], p: Point<T>) -> T {
        let (t, b) = self.locate_nearest(p);
        let tri = self.mesh.triangles[t];
        b[0] * values[tri[0]] + b[1] * values[tri[1]] + b[2] * values[tri[2]]
    }
}
