use std::f64::consts::PI;

use osclab::geometry::{
    jacobian_boundary, BoundaryCurve, Chart, FnCurve, Modulation, OscillationProfile, PerturbedChart, Radius,
    StripRegion,
};
use osclab::scenario::{Scenario, SHIPPED};
use proptest::prelude::*;

fn sine() -> OscillationProfile<f64> {
    OscillationProfile::sine(2.0, 1.0, 2.0)
}

fn charts() -> Vec<Chart<f64>> {
    vec![
        Chart::FlatStrip,
        Chart::annulus(2.0),
        Chart::AnnulusSector {
            radius: Radius::Affine {
                at_zero: 2.0,
                slope: 0.3,
            },
        },
    ]
}

#[test]
fn chart_forward_examples() {
    assert_eq!(Chart::FlatStrip.forward([0.3, -0.5]).unwrap(), [0.3, -0.5]);
    let q = Chart::<f64>::annulus(2.0).forward([0.0, 0.0]).unwrap();
    assert!((q[0] - 2.0).abs() < 1e-15 && q[1].abs() < 1e-15);
    assert!(Chart::<f64>::FlatStrip.forward([1.5, 0.0]).is_err());

    let pc = PerturbedChart::new(Chart::FlatStrip, OscillationProfile::<f64>::constant(2.0), 0.1).unwrap();
    for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
        let q = pc.forward([x, 0.0]).unwrap();
        assert!((q[0] - x).abs() < 1e-15 && (q[1] - 0.2).abs() < 1e-15);
    }
}

#[test]
fn rho_eval_examples() {
    let c = OscillationProfile::<f64>::constant(2.0);
    assert!((c.rho_eps(0.1, 0.0).unwrap() - 0.2).abs() < 1e-15);
    // sin(pi z) + 2 at z = 0.5
    assert!((sine().rho_eps(0.1, 0.05).unwrap() - 0.3).abs() < 1e-14);
    assert!(sine().rho_eps(0.0, 0.1).is_err());
    assert!(sine().rho_eps(-0.1, 0.1).is_err());
}

#[test]
fn boundary_jacobian_examples() {
    let line = FnCurve {
        point: |x: f64| [x, 0.0],
        tangent: |_: f64| [1.0, 0.0],
    };
    for x in [-0.9, 0.0, 0.4] {
        assert_eq!(jacobian_boundary(&line, x).unwrap(), 1.0);
    }
    for x in [-0.8, 0.0, 0.5] {
        assert!((jacobian_boundary(&Chart::annulus(2.0), x).unwrap() - PI).abs() < 1e-14);
    }
    // away from kinks the sawtooth boundary has slope +-1
    let pc = PerturbedChart::new(Chart::FlatStrip, OscillationProfile::sawtooth(1.0, 0.5), 0.1).unwrap();
    for x in [-0.93, -0.41, 0.12, 0.67] {
        let j = jacobian_boundary(&pc, x).unwrap();
        assert!((j - 2f64.sqrt()).abs() < 1e-12, "{x}: {j}");
        let fd = 1e-6;
        let (a, b) = (pc.point(x - fd).unwrap(), pc.point(x + fd).unwrap());
        let slope = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / (2.0 * fd);
        assert!((slope - j).abs() < 1e-6);
    }
}

#[test]
fn volume_jacobian_examples() {
    assert_eq!(Chart::FlatStrip.jacobian_volume([0.2, -0.7]).unwrap(), 1.0);
    let a = Chart::annulus(2.0);
    assert!((a.jacobian_volume([0.3, 0.0]).unwrap() - PI / 2.0).abs() < 1e-14);
    assert!((a.jacobian_volume([-0.4, 1.0]).unwrap() - 5.0 * PI / 8.0).abs() < 1e-14);
}

/// Central differences at two step sizes: the error must shrink like `fd^2`.
#[test]
fn finite_difference_jacobians_match() {
    for chart in charts() {
        for p in [[-0.7, -0.4], [0.1, 0.0], [0.6, 0.5]] {
            let exact = chart.jacobian_volume(p).unwrap();
            let fd_det = |d: f64| {
                let f = |q: [f64; 2]| chart.forward(q).unwrap();
                let (xp, xm) = (f([p[0] + d, p[1]]), f([p[0] - d, p[1]]));
                let (sp, sm) = (f([p[0], p[1] + d]), f([p[0], p[1] - d]));
                let dx = [(xp[0] - xm[0]) / (2.0 * d), (xp[1] - xm[1]) / (2.0 * d)];
                let ds = [(sp[0] - sm[0]) / (2.0 * d), (sp[1] - sm[1]) / (2.0 * d)];
                (dx[0] * ds[1] - dx[1] * ds[0]).abs()
            };
            let (e4, e5) = ((fd_det(1e-4) - exact).abs(), (fd_det(1e-5) - exact).abs());
            assert!(e4 < 1e-7 && e5 < 1e-8, "{chart:?} at {p:?}: {e4} {e5}");
            let fd_trace = {
                let d = 1e-5;
                let (a, b) = (chart.point(p[0] - d).unwrap(), chart.point(p[0] + d).unwrap());
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / (2.0 * d)
            };
            assert!((fd_trace - jacobian_boundary(&chart, p[0]).unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn charts_are_lipschitz() {
    for chart in charts() {
        let l = chart.lipschitz_estimate(21);
        assert!(l.is_finite() && l > 0.0);
        // |d Phi| is bounded by (pi/2)(r + 1/2) + |r'| + 1/2 on the annulus
        assert!(l < 5.0, "{chart:?}: {l}");
    }
}

#[test]
fn strip_area_scales_with_eps() {
    let pc = |eps: f64| PerturbedChart::new(Chart::FlatStrip, OscillationProfile::constant(2.0), eps).unwrap();
    for eps in [0.2, 0.1, 0.05] {
        let area = StripRegion::new(pc(eps)).area();
        assert!((area - 4.0 * eps).abs() < 1e-13);
    }
    let sc = Scenario::<f64>::shipped("annulus_sine").unwrap();
    let ratios: Vec<f64> = sc
        .ladder
        .values()
        .iter()
        .map(|&e| StripRegion::new(sc.perturbed(e).unwrap()).area() / e)
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo > 0.0 && hi / lo < 1.2, "{ratios:?}");
}

#[test]
fn shipped_scenarios_validate() {
    for name in SHIPPED {
        Scenario::<f64>::shipped(name).unwrap().validate().unwrap();
        Scenario::<f32>::shipped(name).unwrap().validate().unwrap();
    }
    assert!(Scenario::<f64>::shipped("nope").is_err());
}

#[test]
fn trace_converges_uniformly() {
    let sc = Scenario::<f64>::shipped("annulus_sine").unwrap();
    let lip = sc.chart.lipschitz_estimate(21);
    for eps in sc.ladder.values() {
        let pc = sc.perturbed(eps).unwrap();
        let bound = pc.profile.rho_eps_max(eps) * lip;
        let worst = (0..=400)
            .map(|i| -1.0 + 2.0 * i as f64 / 400.0)
            .map(|x| {
                let (a, b) = (pc.trace(x).unwrap(), sc.chart.trace(x).unwrap());
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        assert!(worst <= bound * (1.0 + 1e-12), "eps {eps}: {worst} > {bound}");
    }
}

fn profiles() -> impl Strategy<Value = OscillationProfile<f64>> {
    prop_oneof![
        (0.5f64..3.0).prop_map(OscillationProfile::constant),
        (0.5f64..2.0, 0.5f64..1.5).prop_map(|(l, o)| OscillationProfile::sawtooth(l, o)),
        (0.5f64..2.0, 0.1f64..1.0).prop_map(|(l, a)| OscillationProfile::sine(l, a, a + 0.5)),
    ]
    .prop_flat_map(|p| {
        (Just(p), 0.3f64..=1.0, 0.5f64..1.5, -0.3f64..0.3).prop_map(|(p, alpha, m0, m1)| {
            p.with_alpha(alpha)
                .with_modulation(Modulation { at_zero: m0, slope: m1 })
        })
    })
}

proptest! {
    #[test]
    fn profile_is_periodic_and_nonnegative(p in profiles(), z in -5.0f64..5.0) {
        prop_assert!((p.rho(z + p.period) - p.rho(z)).abs() < 1e-12);
        prop_assert!(p.rho(z) >= 0.0);
    }

    #[test]
    fn rho_eps_is_bounded_by_eps(p in profiles(), k in 0u32..7, x in -1.0f64..1.0) {
        let eps = 0.2 / 2f64.powi(k as i32);
        let r = p.rho_eps(eps, x).unwrap();
        prop_assert!(r >= 0.0 && r <= eps * p.modulation.max_on_unit() * p.max_value() * (1.0 + 1e-12));
    }

    #[test]
    fn perturbation_branches_agree_and_invert(p in profiles(), k in 0u32..7, x in -1.0f64..1.0, s in -1.0f64..1.0) {
        let eps = 0.2 / 2f64.powi(k as i32);
        prop_assume!(p.rho_eps_max(eps) < 1.0);
        let pc = PerturbedChart::new(Chart::FlatStrip, p, eps).unwrap();
        let on_line = pc.perturb([x, 0.0]);
        prop_assert_eq!(on_line, [x, pc.rho(x)]);
        let back = pc.unperturb(pc.perturb([x, s]));
        prop_assert!((back[0] - x).abs() < 1e-12 && (back[1] - s).abs() < 1e-12);
        if s < 0.0 {
            let q = pc.perturb([x, s]);
            prop_assert!(q[1] >= -1.0 - 1e-12 && q[1] <= pc.rho(x) + 1e-12);
        }
    }

    #[test]
    fn perturbed_trace_is_base_at_rho(p in profiles(), x in -1.0f64..1.0, r in prop_oneof![Just(0.0), 0.0f64..0.4]) {
        let chart = Chart::AnnulusSector { radius: Radius::Affine { at_zero: 2.0, slope: r } };
        let pc = PerturbedChart::new(chart.clone(), p, 0.05).unwrap();
        let a = pc.trace(x).unwrap();
        let b = chart.forward([x, pc.rho(x)]).unwrap();
        prop_assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }

    #[test]
    fn rho_eps_slope_is_uniform_in_eps(p in profiles(), x in -1.0f64..1.0) {
        let bounds: Vec<f64> = (0..7).map(|k| p.rho_eps_lipschitz_bound(0.2 / 2f64.powi(k))).collect();
        let d = 1e-7;
        for (k, bound) in bounds.iter().enumerate() {
            let eps = 0.2 / 2f64.powi(k as i32);
            let (a, b) = (p.rho_eps(eps, (x - d).max(-1.0)).unwrap(), p.rho_eps(eps, (x + d).min(1.0)).unwrap());
            let q = (b - a).abs() / ((x + d).min(1.0) - (x - d).max(-1.0));
            prop_assert!(q <= bound * (1.0 + 1e-6) + 1e-6);
        }
        // alpha = 1 keeps the slope bound independent of eps
        if p.alpha == 1.0 {
            prop_assert!((bounds[0] - bounds[6]).abs() <= 1e-12 * bounds[0].max(1.0));
        }
    }
}
