//! Gauss rules on intervals and triangles, and composite panel integration.

use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        // Newton iteration on P_n in f64, then cast
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0f64, 0.0f64);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = T::lit(-z);
            nodes[n - 1 - i] = T::lit(z);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(mid + half * x))
            * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

/// Composite Gauss rule over consecutive panels `breaks[i]..breaks[i+1]`, each
/// split into `sub` equal pieces.
pub fn composite<T: Real, F: FnMut(T) -> T>(rule: &GaussLegendre<T>, breaks: &[T], sub: usize, mut f: F) -> T {
    let mut total = T::zero();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = (b - a) / T::from_count(sub);
        for k in 0..sub {
            let lo = a + step * T::from_count(k);
            let hi = if k + 1 == sub { b } else { lo + step };
            total = total + rule.integrate(lo, hi, &mut f);
        }
    }
    total
}

/// Composite rule returning all mapped `(node, weight)` pairs.
pub fn composite_points<T: Real>(rule: &GaussLegendre<T>, breaks: &[T], sub: usize) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(breaks.len() * sub * rule.nodes.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = (b - a) / T::from_count(sub);
        for k in 0..sub {
            let lo = a + step * T::from_count(k);
            let hi = if k + 1 == sub { b } else { lo + step };
            out.extend(rule.mapped(lo, hi));
        }
    }
    out
}

/// Merges two sorted breakpoint lists, removing near-duplicates.
pub fn merge_breaks<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut v: Vec<T> = a.iter().chain(b).copied().collect();
    v.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let span = match (v.first(), v.last()) {
        (Some(&lo), Some(&hi)) => (hi - lo).abs(),
        _ => T::one(),
    };
    let tol = span * T::epsilon() * T::lit(16.0);
    v.dedup_by(|p, q| (*p - *q).abs() <= tol);
    v
}

/// Symmetric 3-point rule of order 2 on the reference triangle (barycentric
/// coordinates, weights summing to 1).
pub fn triangle_rule<T: Real>() -> [([T; 3], T); 3] {
    let a = T::lit(2.0 / 3.0);
    let b = T::lit(1.0 / 6.0);
    let w = T::lit(1.0 / 3.0);
    [([a, b, b], w), ([b, a, b], w), ([b, b, a], w)]
}

/// Two-point Gauss rule on an edge, as `(t, weight)` with `t` in `[0, 1]` and weights summing to 1.
pub fn edge_rule<T: Real>() -> [(T, T); 2] {
    let d = T::lit(0.5 / 3f64.sqrt());
    let h = T::lit(0.5);
    [(h - d, h), (h + d, h)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let g = GaussLegendre::<f64>::new(4);
        // degree 7 exact
        let v = g.integrate(0.0, 2.0, |x| x.powi(7) - 3.0 * x.powi(2));
        assert!((v - (2f64.powi(8) / 8.0 - 8.0)).abs() < 1e-12);
        let w: f64 = g.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_f32_nodes() {
        let g = GaussLegendre::<f32>::new(2);
        assert!((g.nodes[1] - (1.0f32 / 3f32.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn composite_over_kinked_function() {
        let g = GaussLegendre::<f64>::new(2);
        let v = composite(&g, &[-1.0, 0.0, 1.0], 3, |x: f64| x.abs());
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_is_order_two() {
        // integral of l0^2 over reference triangle of area 1/2 equals 1/12
        let r = triangle_rule::<f64>();
        let v: f64 = r.iter().map(|(l, w)| w * l[0] * l[0]).sum::<f64>() * 0.5;
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
        let e = edge_rule::<f64>();
        let v: f64 = e.iter().map(|(t, w)| w * t * t * t).sum();
        assert!((v - 0.25).abs() < 1e-15);
    }
}
