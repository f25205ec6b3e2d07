use super::{EdgeTag, ElementTag, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{Chart, OscillationProfile, PerturbedChart, ProfileShape};
use crate::scalar::{dist, norm, Point, Real};
use crate::scenario::Scenario;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::collections::HashSet;

/// Knobs of the generator beyond the boundary size `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshOptions<T> {
    /// Target element size far from the boundary.
    pub h_interior: T,
    /// Uniform fine layers directly below the fixed boundary.
    pub fine_layers: usize,
    /// Minimum angle requested from the Delaunay refinement of the strip.
    pub strip_angle_deg: f64,
    /// Spacing of the strip polygon nodes on the graph and the sides, relative to `h`.
    pub strip_boundary_spacing: f64,
    /// Sweeps of edge flips and vertex smoothing applied to the strip after refinement.
    pub improvement_sweeps: usize,
}

impl<T: Real> Default for MeshOptions<T> {
    fn default() -> Self {
        Self {
            h_interior: T::lit(0.0625),
            fine_layers: 2,
            strip_angle_deg: 28.0,
            strip_boundary_spacing: 1.0,
            improvement_sweeps: 6,
        }
    }
}

/// Builds the mesh of `Omega_eps` (or of `Omega` when `eps == 0`) for a scenario.
pub fn mesh_domain<T: Real>(scenario: &Scenario<T>, eps: T, h: T) -> Result<Mesh<T>> {
    let opts = MeshOptions {
        h_interior: scenario.mesh.h_interior,
        ..MeshOptions::default()
    };
    mesh_chart(&scenario.chart, &scenario.profile, eps, h, &opts)
}

fn check_resolution<T: Real>(profile: &OscillationProfile<T>, eps: T, h: T) -> Result<()> {
    if !(h > T::zero()) {
        return Err(Error::Domain(format!("mesh size h = {h} must be positive")));
    }
    if eps < T::zero() {
        return Err(Error::Domain(format!("eps = {eps} must be non-negative")));
    }
    if eps > T::zero() && profile.shape != ProfileShape::Constant {
        let limit = profile.cell_scale(eps) * profile.period / T::lit(8.0);
        if h > limit * (T::one() + T::lit(1e-9)) {
            return Err(Error::Resolution {
                h: h.to_f64_lossy(),
                limit: limit.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

struct Columns<T> {
    uniform: Vec<T>,
    levels: usize,
    dx_fine: T,
    /// Chart `ds` per chart `dx` for physically isotropic cells.
    ratio: T,
}

fn columns<T: Real>(chart: &Chart<T>, h: T, h_interior: T) -> Columns<T> {
    let samples = 65;
    let mut sx = T::zero();
    for i in 0..samples {
        let x = T::lit(-1.0) + T::lit(2.0) * T::from_count(i) / T::from_count(samples - 1);
        sx = sx.max(chart.stretch([x, T::zero()]).0);
    }
    let ss = chart.stretch([T::zero(), T::zero()]).1;
    let two = T::lit(2.0);
    let dx_target = h / sx;
    let dxc_target = h_interior.max(h) / sx;
    let n_coarse = (two / dxc_target).ceil().to_usize().unwrap_or(1).max(1);
    let mut levels = 0usize;
    while two / T::from_count(n_coarse << levels) > dx_target * (T::one() + T::lit(1e-9)) {
        levels += 1;
    }
    let n_fine = n_coarse << levels;
    let dx_fine = two / T::from_count(n_fine);
    let uniform = (0..=n_fine)
        .map(|j| {
            if j == n_fine {
                T::one()
            } else {
                -T::one() + dx_fine * T::from_count(j)
            }
        })
        .collect();
    Columns {
        uniform,
        levels,
        dx_fine,
        ratio: sx / ss,
    }
}

/// Corners with an interior angle below this get geometrically graded node spacing.
const SHARP_CORNER: f64 = std::f64::consts::FRAC_PI_4;

/// Interior angles (radians) of the strip at its upper left and right corners,
/// between the lateral side and the graph.
fn corner_angles<T: Real>(pc: &PerturbedChart<T>) -> (T, T) {
    let angle = |u: Point<T>, w: Point<T>| {
        let c = (u[0] * w[0] + u[1] * w[1]) / (norm(u) * norm(w));
        c.max(-T::one()).min(T::one()).acos()
    };
    let down = |x: T| {
        let (_, ds) = pc.base.derivative([x, pc.rho(x)]);
        [-ds[0], -ds[1]]
    };
    let tl = pc.trace_tangent(-T::one());
    let tr = pc.trace_tangent(T::one());
    (angle(down(-T::one()), tl), angle(down(T::one()), [-tr[0], -tr[1]]))
}

fn sharp<T: Real>(theta: T) -> Option<T> {
    (theta < T::lit(SHARP_CORNER)).then_some(theta)
}

/// Node positions strictly inside `(0, total)` along a curve of length `total`
/// with spacing at most `h`. Near an end carrying a sharp corner of angle
/// `theta` the spacing shrinks geometrically (ratio `1 + theta`), so elements
/// inside the wedge stay well shaped.
fn graded_targets<T: Real>(total: T, h: T, start: Option<T>, end: Option<T>) -> Vec<T> {
    let ramp = |theta: T| -> Vec<T> {
        let mut r = h / theta;
        let mut v = vec![r];
        while r > T::lit(0.5) * theta * h {
            r = r / (T::one() + theta);
            v.push(r);
        }
        v.reverse();
        v
    };
    let mut a = start.map(ramp).unwrap_or_default();
    let mut b = end.map(ramp).unwrap_or_default();
    let reach = |v: &Vec<T>| v.last().copied().unwrap_or(T::zero());
    if total - reach(&a) - reach(&b) < h {
        a.clear();
        b.clear();
    }
    let lo = reach(&a);
    let hi = total - reach(&b);
    let mut out = a.clone();
    let n = ((hi - lo) / h).ceil().to_usize().unwrap_or(1).max(1);
    for k in 1..n {
        out.push(lo + (hi - lo) * T::from_count(k) / T::from_count(n));
    }
    out.extend(b.iter().rev().map(|&r| total - r));
    out
}

/// Chart positions `x'` of the nodes placed on the oscillating boundary:
/// profile kinks plus arclength spacing of at most `h` between them, graded
/// toward sharp corners.
fn graph_nodes<T: Real>(pc: &PerturbedChart<T>, h: T) -> Result<Vec<T>> {
    let (left, right) = corner_angles(pc);
    let mut breaks = pc.profile.kinks_in(pc.eps, -T::one(), T::one());
    breaks.insert(0, -T::one());
    breaks.push(T::one());
    let mut nodes = vec![-T::one()];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        // arclength table on a fine sampling of [a, b]
        let cells = ((b - a) / (pc.profile.cell_scale(pc.eps) * pc.profile.period))
            .ceil()
            .to_usize()
            .unwrap_or(1);
        let probe = 64 * cells.max(1);
        let mut rough = T::zero();
        let mut prev = pc.trace(a)?;
        for i in 1..=probe {
            let p = pc.trace(a + (b - a) * T::from_count(i) / T::from_count(probe))?;
            rough = rough + dist(prev, p);
            prev = p;
        }
        let n = (rough / h).ceil().to_usize().unwrap_or(1).max(1);
        let m = (16 * n).max(probe);
        let mut xs = Vec::with_capacity(m + 1);
        let mut arc = Vec::with_capacity(m + 1);
        let mut prev = pc.trace(a)?;
        let mut acc = T::zero();
        for i in 0..=m {
            let x = a + (b - a) * T::from_count(i) / T::from_count(m);
            let p = pc.trace(x)?;
            acc = acc + dist(prev, p);
            prev = p;
            xs.push(x);
            arc.push(acc);
        }
        let first = a == -T::one();
        let last = b == T::one();
        let targets = graded_targets(
            acc,
            h,
            if first { sharp(left) } else { None },
            if last { sharp(right) } else { None },
        );
        let mut seg = 0usize;
        for target in targets {
            while seg + 2 < arc.len() && arc[seg + 1] < target {
                seg += 1;
            }
            let w = (target - arc[seg]) / (arc[seg + 1] - arc[seg]);
            nodes.push(xs[seg] + w * (xs[seg + 1] - xs[seg]));
        }
        nodes.push(b);
    }
    Ok(nodes)
}

/// Chart positions `x'` of the boundary nodes of the mesh of `Omega_eps` on
/// its outer graph boundary (`psi_eps`, or `psi` when `eps == 0`).
pub fn boundary_nodes<T: Real>(scenario: &Scenario<T>, eps: T, h: T) -> Result<Vec<T>> {
    check_resolution(&scenario.profile, eps, h)?;
    if eps > T::zero() && scenario.profile.rho_eps_max(eps) > T::zero() {
        graph_nodes(&scenario.perturbed(eps)?, h)
    } else {
        Ok(columns(&scenario.chart, h, scenario.mesh.h_interior).uniform)
    }
}

/// Physical polyline through the boundary nodes of `psi_eps` (or `psi` for `eps == 0`).
pub fn boundary_polyline<T: Real>(scenario: &Scenario<T>, eps: T, h: T) -> Result<Vec<Point<T>>> {
    let xs = boundary_nodes(scenario, eps, h)?;
    if eps > T::zero() {
        let pc = scenario.perturbed(eps)?;
        xs.iter().map(|&x| pc.trace(x)).collect()
    } else {
        xs.iter().map(|&x| scenario.chart.trace(x)).collect()
    }
}

struct Builder<'a, T> {
    chart: &'a Chart<T>,
    vertices: Vec<Point<T>>,
    chart_coords: Vec<Point<T>>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<ElementTag>,
}

impl<'a, T: Real> Builder<'a, T> {
    fn vertex(&mut self, c: Point<T>, p: Point<T>) -> usize {
        self.chart_coords.push(c);
        self.vertices.push(p);
        self.vertices.len() - 1
    }

    fn row(&mut self, pts: impl Iterator<Item = Point<T>>) -> Vec<usize> {
        pts.map(|c| {
            let p = self.chart.forward_unchecked(c);
            self.vertex(c, p)
        })
        .collect()
    }

    /// Adds a triangle given in chart orientation, flipping it when the chart reverses orientation.
    fn push(&mut self, mut t: [usize; 3], tag: ElementTag) {
        if self.chart.orientation() < T::zero() {
            t.swap(1, 2);
        }
        self.triangles.push(t);
        self.tags.push(tag);
    }

    fn min_angle(&self, t: [usize; 3]) -> T {
        min_angle_of([self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]])
    }

    /// Quads between two rows with identical column counts (`top` above `bottom` in chart `s`).
    fn quads(&mut self, bottom: &[usize], top: &[usize]) {
        for j in 0..bottom.len() - 1 {
            let (b0, b1, t0, t1) = (bottom[j], bottom[j + 1], top[j], top[j + 1]);
            let a = [[b0, b1, t1], [b0, t1, t0]];
            let b = [[b0, b1, t0], [b1, t1, t0]];
            let qa = self.min_angle(a[0]).min(self.min_angle(a[1]));
            let qb = self.min_angle(b[0]).min(self.min_angle(b[1]));
            let pick = if qa >= qb { a } else { b };
            self.push(pick[0], ElementTag::Interior);
            self.push(pick[1], ElementTag::Interior);
        }
    }

    /// 2:1 transition from a fine row (`top`) to the coarse row (`bottom`) made
    /// of the even-indexed fine positions plus the last one.
    fn transition(&mut self, bottom: &[usize], top: &[usize]) {
        let n = top.len() - 1;
        let mut c = 0;
        let mut i = 0;
        while i < n {
            if i + 2 <= n {
                let (b0, b2) = (bottom[c], bottom[c + 1]);
                let (t0, t1, t2) = (top[i], top[i + 1], top[i + 2]);
                self.push([b0, b2, t1], ElementTag::Interior);
                self.push([b0, t1, t0], ElementTag::Interior);
                self.push([b2, t2, t1], ElementTag::Interior);
                i += 2;
            } else {
                self.quads(&bottom[c..c + 2], &top[i..i + 2]);
                i += 1;
            }
            c += 1;
        }
    }
}

fn coarsen<T: Copy>(row: &[T]) -> Vec<T> {
    let n = row.len() - 1;
    let mut out: Vec<T> = row.iter().step_by(2).copied().collect();
    if n % 2 == 1 {
        out.push(row[n]);
    }
    out
}

pub(crate) fn min_angle_of<T: Real>(p: [Point<T>; 3]) -> T {
    let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
    let mut m = T::lit(180.0);
    for k in 0..3 {
        let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
        let cs = ((b * b + c * c - a * a) / (T::lit(2.0) * b * c))
            .max(-T::one())
            .min(T::one());
        m = m.min(cs.acos().to_degrees());
    }
    m
}

/// Mesh generator working in chart coordinates below the fixed boundary
/// (a fine band under `s = 0`, 2:1 transitions to the interior size and
/// uniform layers down to `s = -1`) combined with a quality Delaunay mesh of
/// the strip between `s = 0` and the oscillating graph.
pub fn mesh_chart<T: Real>(
    chart: &Chart<T>,
    profile: &OscillationProfile<T>,
    eps: T,
    h: T,
    opts: &MeshOptions<T>,
) -> Result<Mesh<T>> {
    chart.validate()?;
    profile.validate()?;
    check_resolution(profile, eps, h)?;
    let cols = columns(chart, h, opts.h_interior);
    let mut b = Builder {
        chart,
        vertices: Vec::new(),
        chart_coords: Vec::new(),
        triangles: Vec::new(),
        tags: Vec::new(),
    };
    // rows listed top (s = 0) to bottom (s = -1)
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let r = b.row(cols.uniform.iter().map(|&x| [x, T::zero()]));
    rows.push(r);

    let mut s = T::zero();
    let dy_fine = cols.dx_fine * cols.ratio;
    for _ in 0..opts.fine_layers.max(1) {
        if s - dy_fine <= -T::one() + dy_fine {
            break;
        }
        s = s - dy_fine;
        let r = b.row(cols.uniform.iter().map(|&x| [x, s]));
        rows.push(r);
    }
    let mut xs = cols.uniform.clone();
    let mut dx = cols.dx_fine;
    let mut transitions = HashSet::new();
    for _ in 0..cols.levels {
        let next_s = s - dx * cols.ratio;
        if next_s <= -T::one() + dx * cols.ratio {
            break;
        }
        s = next_s;
        xs = coarsen(&xs);
        dx = dx * T::lit(2.0);
        let r = b.row(xs.iter().map(|&x| [x, s]));
        transitions.insert(rows.len());
        rows.push(r);
    }
    let depth = T::one() + s;
    let dy = dx * cols.ratio;
    let n = (depth / dy).round().to_usize().unwrap_or(1).max(1);
    for m in 1..=n {
        let sm = if m == n {
            -T::one()
        } else {
            s - depth * T::from_count(m) / T::from_count(n)
        };
        let r = b.row(xs.iter().map(|&x| [x, sm]));
        rows.push(r);
    }
    for k in 0..rows.len() - 1 {
        let (top, bottom) = (rows[k].clone(), rows[k + 1].clone());
        if transitions.contains(&(k + 1)) {
            b.transition(&bottom, &top);
        } else {
            b.quads(&bottom, &top);
        }
    }

    let mut edges = Vec::new();
    let bottom = rows.last().unwrap();
    for w in bottom.windows(2) {
        edges.push(([w[0], w[1]], EdgeTag::Base));
    }
    for w in rows.windows(2) {
        edges.push(([w[0][0], w[1][0]], EdgeTag::Side));
        edges.push(([*w[1].last().unwrap(), *w[0].last().unwrap()], EdgeTag::Side));
    }

    let fixed_top = rows[0].clone();
    let with_strip = eps > T::zero() && profile.rho_eps_max(eps) > T::zero();
    if with_strip {
        let pc = PerturbedChart::new(chart.clone(), profile.clone(), eps)?;
        mesh_strip(&mut b, &pc, &fixed_top, h, opts, &mut edges)?;
    } else {
        for w in fixed_top.windows(2) {
            edges.push(([w[1], w[0]], EdgeTag::Graph));
        }
    }

    let mut mesh = Mesh {
        vertices: b.vertices,
        chart_coords: b.chart_coords,
        triangles: b.triangles,
        element_tags: b.tags,
        boundary_edges: edges,
        h,
        eps,
    };
    mesh.orient_boundary_edges();
    Ok(mesh)
}

/// Constrained Delaunay mesh of the strip between the fixed boundary row and
/// the oscillating graph. The fixed row and all polygon edges are kept intact
/// so the strip conforms to the layered mesh below it.
fn mesh_strip<T: Real>(
    b: &mut Builder<'_, T>,
    pc: &PerturbedChart<T>,
    fixed_top: &[usize],
    h: T,
    opts: &MeshOptions<T>,
    edges: &mut Vec<([usize; 2], EdgeTag)>,
) -> Result<()> {
    let chart = &pc.base;
    let hb = h * T::lit(opts.strip_boundary_spacing);
    let xs = graph_nodes(pc, hb)?;
    let thick: Vec<T> = xs.iter().map(|&x| pc.rho(x)).collect();
    if thick.iter().any(|t| !(*t > T::zero())) {
        return Err(Error::Geometry(
            "strip thickness vanishes at some boundary node; use a positive profile".into(),
        ));
    }
    let ss = |x: T| chart.stretch([x, T::zero()]).1;
    // polygon: fixed row left to right, right side up, graph right to left, left side down
    let mut polygon: Vec<usize> = fixed_top.to_vec();
    let (left_angle, right_angle) = corner_angles(pc);
    let side = |b: &mut Builder<'_, T>, x: T, t: T, theta: T| -> Vec<usize> {
        let len = ss(x) * t;
        graded_targets(len, hb, None, sharp(theta))
            .into_iter()
            .map(|d| {
                let c = [x, t * d / len];
                let p = chart.forward_unchecked(c);
                b.vertex(c, p)
            })
            .collect()
    };
    let right = side(b, T::one(), *thick.last().unwrap(), right_angle);
    let graph: Vec<usize> = xs
        .iter()
        .zip(&thick)
        .rev()
        .map(|(&x, &t)| {
            let c = [x, t];
            let p = chart.forward_unchecked(c);
            b.vertex(c, p)
        })
        .collect();
    let mut left = side(b, -T::one(), thick[0], left_angle);
    left.reverse();

    let right_chain: Vec<usize> = std::iter::once(*fixed_top.last().unwrap())
        .chain(right.iter().copied())
        .chain(std::iter::once(graph[0]))
        .collect();
    let left_chain: Vec<usize> = std::iter::once(*graph.last().unwrap())
        .chain(left.iter().copied())
        .chain(std::iter::once(fixed_top[0]))
        .collect();
    for w in right_chain.windows(2).chain(left_chain.windows(2)) {
        edges.push(([w[0], w[1]], EdgeTag::Side));
    }
    for w in graph.windows(2) {
        edges.push(([w[0], w[1]], EdgeTag::Graph));
    }
    polygon.extend(&right);
    polygon.extend(&graph);
    polygon.extend(&left);

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut ours_of_spade: Vec<usize> = Vec::new();
    let mut handles = Vec::with_capacity(polygon.len());
    for &v in &polygon {
        let p = b.vertices[v];
        let hd = cdt
            .insert(Point2::new(p[0].to_f64_lossy(), p[1].to_f64_lossy()))
            .map_err(|e| Error::Geometry(format!("strip triangulation: {e:?}")))?;
        if hd.index() != ours_of_spade.len() {
            return Err(Error::Geometry(format!(
                "strip polygon vertex {v} coincides with another vertex"
            )));
        }
        ours_of_spade.push(v);
        handles.push(hd);
    }
    for k in 0..handles.len() {
        let (a, c) = (handles[k], handles[(k + 1) % handles.len()]);
        if cdt.can_add_constraint(a, c) {
            cdt.add_constraint(a, c);
        } else {
            return Err(Error::Geometry("strip boundary polygon self-intersects".into()));
        }
    }
    let hf = h.to_f64_lossy();
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .keep_constraint_edges()
        .with_angle_limit(AngleLimit::from_deg(opts.strip_angle_deg))
        .with_max_allowed_area(0.5 * hf * hf)
        .with_max_additional_vertices(polygon.len() * 400);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Geometry("strip refinement did not complete".into()));
    }
    let excluded: HashSet<_> = result.excluded_faces.iter().copied().collect();
    let first_free = b.vertices.len();
    for v in cdt.vertices().skip(ours_of_spade.len()) {
        let q = v.position();
        let p = [T::lit(q.x), T::lit(q.y)];
        // chart coordinates are filled in once the vertex positions are final
        let id = b.vertex([T::zero(), T::zero()], p);
        ours_of_spade.push(id);
    }
    let first_tri = b.triangles.len();
    for f in cdt.inner_faces() {
        if excluded.contains(&f.fix()) {
            continue;
        }
        let [a, c, d] = f.vertices().map(|v| ours_of_spade[v.fix().index()]);
        // spade faces are counter-clockwise in physical space
        b.triangles.push([a, c, d]);
        b.tags.push(ElementTag::Strip);
    }
    let free: Vec<usize> = (first_free..b.vertices.len()).collect();
    for _ in 0..opts.improvement_sweeps {
        let flipped = flip_sweep(&b.vertices, &mut b.triangles[first_tri..]);
        let moved = smooth_sweep(&mut b.vertices, &b.triangles[first_tri..], &free);
        if flipped == 0 && moved == 0 {
            break;
        }
    }
    for &v in &free {
        b.chart_coords[v] = chart.inverse(b.vertices[v])?;
    }
    Ok(())
}

/// Triangles at least this well shaped (degrees) are left alone by the improvement pass.
const GOOD_ANGLE: f64 = 30.0;

fn signed_area<T: Real>(v: &[Point<T>], t: [usize; 3]) -> T {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / T::lit(2.0)
}

fn tri_angle<T: Real>(v: &[Point<T>], t: [usize; 3]) -> T {
    min_angle_of([v[t[0]], v[t[1]], v[t[2]]])
}

/// One pass of min-angle-improving flips over edges shared by two triangles.
fn flip_sweep<T: Real>(v: &[Point<T>], tris: &mut [[usize; 3]]) -> usize {
    let mut owner: std::collections::HashMap<[usize; 2], (usize, usize)> =
        std::collections::HashMap::with_capacity(tris.len() * 3);
    for (i, t) in tris.iter().enumerate() {
        for k in 0..3 {
            owner.insert([t[k], t[(k + 1) % 3]], (i, k));
        }
    }
    let mut touched = vec![false; tris.len()];
    let mut flips = 0;
    for i in 0..tris.len() {
        for k in 0..3 {
            if touched[i] {
                break;
            }
            let t1 = tris[i];
            let (a, b, c) = (t1[k], t1[(k + 1) % 3], t1[(k + 2) % 3]);
            let Some(&(j, l)) = owner.get(&[b, a]) else {
                continue;
            };
            if touched[j] {
                continue;
            }
            let d = tris[j][(l + 2) % 3];
            let n1 = [c, a, d];
            let n2 = [c, d, b];
            if !(signed_area(v, n1) > T::zero() && signed_area(v, n2) > T::zero()) {
                continue;
            }
            let before = tri_angle(v, t1).min(tri_angle(v, tris[j]));
            if before >= T::lit(GOOD_ANGLE) {
                continue;
            }
            let after = tri_angle(v, n1).min(tri_angle(v, n2));
            if after > before + T::lit(1e-6) {
                tris[i] = n1;
                tris[j] = n2;
                touched[i] = true;
                touched[j] = true;
                flips += 1;
            }
        }
    }
    flips
}

/// Moves each free vertex toward the centroid of its neighbours when that
/// raises the smallest angle among its incident triangles.
fn smooth_sweep<T: Real>(v: &mut [Point<T>], tris: &[[usize; 3]], free: &[usize]) -> usize {
    if free.is_empty() {
        return 0;
    }
    let base = free[0];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); free.len()];
    for (i, t) in tris.iter().enumerate() {
        for &x in t {
            if x >= base && x - base < free.len() {
                incident[x - base].push(i);
            }
        }
    }
    let mut moved = 0;
    for (slot, &x) in free.iter().enumerate() {
        let inc = &incident[slot];
        if inc.is_empty() {
            continue;
        }
        let worst = |v: &[Point<T>]| {
            inc.iter()
                .map(|&i| {
                    if signed_area(v, tris[i]) > T::zero() {
                        tri_angle(v, tris[i])
                    } else {
                        -T::one()
                    }
                })
                .fold(T::lit(180.0), |m, a| m.min(a))
        };
        let mut sum = [T::zero(), T::zero()];
        let mut cnt = 0usize;
        for &i in inc {
            for &y in &tris[i] {
                if y != x {
                    sum = [sum[0] + v[y][0], sum[1] + v[y][1]];
                    cnt += 1;
                }
            }
        }
        let target = [sum[0] / T::from_count(cnt), sum[1] / T::from_count(cnt)];
        let old = v[x];
        let before = worst(v);
        if before >= T::lit(GOOD_ANGLE) {
            continue;
        }
        let mut best = (before, old);
        for w in [T::one(), T::lit(0.5), T::lit(0.25)] {
            v[x] = [old[0] + w * (target[0] - old[0]), old[1] + w * (target[1] - old[1])];
            let q = worst(v);
            if q > best.0 + T::lit(1e-6) {
                best = (q, v[x]);
            }
        }
        v[x] = best.1;
        if best.1 != old {
            moved += 1;
        }
    }
    moved
}
