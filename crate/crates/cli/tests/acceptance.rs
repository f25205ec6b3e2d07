//! Acceptance criteria, one verdict line each. Runs without the libtest
//! harness so the verdicts always reach the console; exits non-zero if any
//! criterion fails.

use std::f64::consts::SQRT_2;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use osclab::geometry::ProfileShape;
use osclab::lab::{
    boundary_measure_study, coefficient_study, concentrated_limit_study, manufactured_solution_study,
    neumann_square_study, solve_ladder, trace_constant_study, LabOptions, SolutionLadder,
};
use osclab::scenario::{Scenario, SHIPPED};

type PointFn = fn([f64; 2]) -> f64;
type Criterion = fn() -> Verdict;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn shipped(name: &str) -> Scenario<f64> {
    Scenario::shipped(name).unwrap()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Aitken's delta-squared limit of the last three values; the last value
/// itself when the second difference vanishes.
fn aitken(v: &[f64]) -> f64 {
    let n = v.len();
    let (a, b, c) = (v[n - 3], v[n - 2], v[n - 1]);
    let d2 = c - 2.0 * b + a;
    if d2.abs() <= f64::EPSILON * c.abs().max(1.0) {
        return c;
    }
    c - (c - b) * (c - b) / d2
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

const C1_ESTIMATE_REL: f64 = 1e-2;
const C1_BETA_ABS: f64 = 1e-3;
const C1_GAMMA_ABS: f64 = 1e-8;
const C1_HATS: usize = 32;

fn c1_coefficients() -> Verdict {
    let opts = LabOptions::<f64>::default();
    let saw = coefficient_study(&shipped("flat_sawtooth"), &opts).unwrap();
    // slope +-1 everywhere: the surface element is sqrt(1 + 1)
    let closed_ok = saw
        .rows
        .iter()
        .all(|r| r.gamma_closed.is_some_and(|g| (g - SQRT_2).abs() < 1e-14));
    let worst_saw = saw
        .rows
        .iter()
        .map(|r| (r.gamma_est - SQRT_2).abs() / SQRT_2)
        .fold(0.0, f64::max);

    let flat = shipped("flat_constant");
    let c = match flat.profile.shape {
        ProfileShape::Constant => flat.profile.offset + flat.profile.amplitude,
        _ => unreachable!(),
    };
    let con = coefficient_study(&flat, &opts).unwrap();
    let worst_beta = con.rows.iter().map(|r| (r.beta_est - c).abs()).fold(0.0, f64::max);
    let worst_gamma = con.rows.iter().map(|r| (r.gamma_est - 1.0).abs()).fold(0.0, f64::max);

    verdict(
        saw.rows.len() == C1_HATS
            && closed_ok
            && worst_saw <= C1_ESTIMATE_REL
            && worst_beta <= C1_BETA_ABS
            && worst_gamma <= C1_GAMMA_ABS,
        format!(
            "sawtooth: {} hats, closed gamma = sqrt 2: {closed_ok}, estimate rel err {worst_saw:.2e} <= {C1_ESTIMATE_REL:e}; \
             constant c = {c}: |beta - c| {worst_beta:.2e} <= {C1_BETA_ABS:e}, |gamma - 1| {worst_gamma:.2e} <= {C1_GAMMA_ABS:e}",
            saw.rows.len()
        ),
    )
}

const C2_REL: f64 = 1e-2;

/// `lim (1/eps) int_{strip} h phi = int M(rho) J(x', 0) h phi dx'` in chart
/// coordinates, since the strip is `0 <= s <= eps rho(x'/eps)` there.
fn concentrated_oracle(sc: &Scenario<f64>, h: PointFn, phi: PointFn) -> f64 {
    let p = &sc.profile;
    assert!(p.shape == ProfileShape::Sine && p.modulation.slope == 0.0);
    // sine mean over a period is the offset
    let mean = p.modulation.at_zero * p.offset;
    simpson(-1.0, 1.0, 4000, |x| {
        let q = sc.chart.forward([x, 0.0]).unwrap();
        mean * sc.chart.jacobian_volume([x, 0.0]).unwrap() * h(q) * phi(q)
    })
}

fn c2_concentrated() -> Verdict {
    let sc = shipped("annulus_sine");
    let opts = LabOptions::default();
    let pairs: [(&str, PointFn, PointFn); 2] = [
        ("h = phi = 1", |_| 1.0, |_| 1.0),
        ("h = 1 + x/2, phi = cos y", |p| 1.0 + 0.5 * p[0], |p| p[1].cos()),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, h, phi) in pairs {
        let target = concentrated_oracle(&sc, h, phi);
        let r = concentrated_limit_study(&sc, h, phi, &opts).unwrap();
        let strip = r.column("strip_integral").unwrap();
        let dev: Vec<f64> = strip.iter().map(|s| (s - target).abs()).collect();
        // the constant pair is exact up to rounding on every level
        let floor = 1e-10 * target.abs();
        let decreasing = dev.windows(2).all(|w| w[1] < w[0] || w[1].max(w[0]) <= floor);
        let gap = (aitken(&strip) - target).abs();
        ok &= strip.len() == 7 && decreasing && gap <= C2_REL * target.abs();
        detail.push(format!(
            "{label}: target {target:.6}, deviations {:.2e} -> {:.2e}, decreasing {decreasing}, extrapolation gap {gap:.2e} <= {:.2e}",
            dev[0],
            dev[dev.len() - 1],
            C2_REL * target.abs()
        ));
    }
    verdict(ok, detail.join("; "))
}

const C3_TOL: f64 = 1e-3;

fn c3_uniqueness() -> Verdict {
    let opts = LabOptions::default();
    let mut worst = 0.0f64;
    let mut ok = true;
    for name in SHIPPED {
        let r = coefficient_study(&shipped(name), &opts).unwrap();
        let u = &r.uniqueness;
        let d = u
            .beta_reference
            .iter()
            .zip(&u.beta_stretched)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ok &= !u.points.is_empty() && d <= C3_TOL;
        worst = worst.max(d);
    }
    verdict(
        ok,
        format!("max pointwise beta discrepancy over shipped scenarios {worst:.2e} <= {C3_TOL:e}"),
    )
}

const C4_WITHIN: f64 = 0.02;
const C4_DIFFERS: f64 = 0.40;

fn c4_boundary_measure() -> Verdict {
    let sc = shipped("flat_sawtooth");
    let r = boundary_measure_study(&sc, &LabOptions::default()).unwrap();
    let fixed = 2.0; // |dOmega cap chart| for the flat strip x in [-1, 1]
    let target = SQRT_2 * fixed;
    let lengths = r.column("length").unwrap();
    let worst = lengths.iter().map(|l| (l - target).abs() / target).fold(0.0, f64::max);
    let least_excess = lengths
        .iter()
        .map(|l| (l - fixed).abs() / fixed)
        .fold(f64::MAX, f64::min);
    verdict(
        lengths.len() == 7 && worst <= C4_WITHIN && least_excess >= C4_DIFFERS,
        format!(
            "lengths within {worst:.2e} of 2 sqrt 2 (<= {C4_WITHIN}); differ from the fixed length by at least {:.1}% (>= {:.0}%)",
            100.0 * least_excess,
            100.0 * C4_DIFFERS
        ),
    )
}

const C5_RATIO: f64 = 2.0;

fn c5_trace() -> Verdict {
    let opts = LabOptions::default();
    let mut worst = 1.0f64;
    let mut ok = true;
    for name in SHIPPED {
        let r = trace_constant_study(&shipped(name), &opts).unwrap();
        for col in ["boundary_trace_constant", "concentrated_trace_constant"] {
            let v = r.column(col).unwrap();
            let (lo, hi) = v.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            let ratio = hi / lo;
            ok &= v.len() == 7 && lo > 0.0 && ratio <= C5_RATIO;
            worst = worst.max(ratio);
        }
    }
    verdict(
        ok,
        format!("worst max/min ratio over shipped scenarios {worst:.3} <= {C5_RATIO}"),
    )
}

const C6_FLOOR_FACTOR: f64 = 3.0;

fn flat_sine_ladder() -> &'static (SolutionLadder<f64>, Duration) {
    static LADDER: OnceLock<(SolutionLadder<f64>, Duration)> = OnceLock::new();
    LADDER.get_or_init(|| {
        let start = Instant::now();
        let l = solve_ladder(&shipped("flat_sine"), &LabOptions::default(), true).unwrap();
        (l, start.elapsed())
    })
}

fn c6_main() -> Verdict {
    let (ladder, _) = flat_sine_ladder();
    let Some(floors) = &ladder.floors else {
        return verdict(false, format!("no refinement control: {:?}", ladder.failure));
    };
    let dist: Vec<f64> = ladder.levels.iter().map(|l| l.distance.h1).collect();
    let pairing: Vec<f64> = ladder.levels.iter().map(|l| l.pairing_gap()).collect();
    let (de, pe) = (aitken(&dist), aitken(&pairing));
    let ok = ladder.failure.is_none()
        && dist.len() == 7
        && strictly_decreasing(&dist)
        && de.abs() <= C6_FLOOR_FACTOR * floors.distance
        && strictly_decreasing(&pairing)
        && pe.abs() <= C6_FLOOR_FACTOR * floors.pairing;
    verdict(
        ok,
        format!(
            "H1 distance {:.3e} -> {:.3e}, extrapolated {de:.2e} <= 3 x floor {:.2e}; pairing gap {:.3e} -> {:.3e}, extrapolated {pe:.2e} <= 3 x floor {:.2e}",
            dist[0],
            dist[dist.len() - 1],
            floors.distance,
            pairing[0],
            pairing[pairing.len() - 1],
            floors.pairing
        ),
    )
}

const C7_COUNT: usize = 5;
const C7_FLOOR_FACTOR: f64 = 5.0;

fn c7_eigen() -> Verdict {
    let (ladder, _) = flat_sine_ladder();
    let Some(floor) = ladder.floors.as_ref().and_then(|f| f.eigenvalues.clone()) else {
        return verdict(false, format!("no eigenvalue floor: {:?}", ladder.failure));
    };
    let mut ok = ladder.failure.is_none() && floor.len() == C7_COUNT;
    let mut detail = Vec::new();
    for j in 0..C7_COUNT.min(floor.len()) {
        let gaps: Vec<f64> = ladder
            .levels
            .iter()
            .map(|l| {
                let (e, z) = l.eigenvalues.as_ref().unwrap();
                (e[j] - z[j]).abs()
            })
            .collect();
        let monotone = strictly_decreasing(&gaps[1..]);
        let last = gaps[gaps.len() - 1];
        let within = last <= C7_FLOOR_FACTOR * floor[j];
        ok &= monotone && within;
        detail.push(format!(
            "gap{} monotone {monotone}, final {last:.3e} vs 5 x floor {:.3e} ({})",
            j + 1,
            C7_FLOOR_FACTOR * floor[j],
            if within { "ok" } else { "exceeds" }
        ));
    }
    verdict(ok, detail.join("; "))
}

const C8_H1_RATE: f64 = 0.9;
const C8_L2_RATE: f64 = 1.8;
const C8_EIG_REL: f64 = 1e-2;

/// Least-squares slope of `log e` against `log h`.
fn loglog_slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn c8_fem() -> Verdict {
    let r = manufactured_solution_study::<f64>(&[8, 16, 32, 64]).unwrap();
    let h1 = loglog_slope(&r.h, &r.column("h1_error").unwrap());
    let l2 = loglog_slope(&r.h, &r.column("l2_error").unwrap());

    let pi2 = std::f64::consts::PI.powi(2);
    // 1 + pi^2 (m^2 + n^2) for (m, n) = (0,0), (1,0), (0,1), (1,1), (2,0), (0,2)
    let exact: Vec<f64> = [0.0, 1.0, 1.0, 2.0, 4.0, 4.0].iter().map(|s| 1.0 + pi2 * s).collect();
    let neu = neumann_square_study::<f64>(64, &LabOptions::<f64>::default().eigen).unwrap();
    let computed = neu.column("computed").unwrap();
    let worst = computed
        .iter()
        .zip(&exact)
        .map(|(c, e)| (c - e).abs() / e)
        .fold(0.0, f64::max);
    verdict(
        h1 >= C8_H1_RATE && l2 >= C8_L2_RATE && computed.len() == exact.len() && worst <= C8_EIG_REL,
        format!(
            "H1 rate {h1:.3} >= {C8_H1_RATE}, L2 rate {l2:.3} >= {C8_L2_RATE}; Neumann eigenvalues at h = 1/64 within {worst:.2e} <= {C8_EIG_REL:e}"
        ),
    )
}

fn run_all(config: &Path, out: &Path, parallel: bool) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_osclab"));
    cmd.args([
        "--config",
        config.to_str().unwrap(),
        "--study",
        "all",
        "--seed",
        "7",
        "--out",
    ])
    .arg(out);
    if parallel {
        cmd.arg("--parallel");
    }
    cmd.output().unwrap().status.code().unwrap_or(-1)
}

fn c9_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("reduced.cfg");
    fs::write(&config, "scenario = flat_sine\n\n[ladder]\nlevels = 3\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    // the second run solves the ladder levels in parallel
    let codes = (run_all(&config, &a, false), run_all(&config, &b, true));
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok())
        .collect();
    let summaries_equal = fs::read(a.join("summary.txt")).unwrap() == fs::read(b.join("summary.txt")).unwrap();
    verdict(
        codes.0 == codes.1 && (0..=1).contains(&codes.0) && names.len() >= 8 && differing.is_empty() && summaries_equal,
        format!(
            "{} CSVs compared, {} differ, summaries identical {summaries_equal}, exit codes {:?}",
            names.len(),
            differing.len(),
            codes
        ),
    )
}

fn main() {
    // name, check, runtime limit in seconds
    let criteria: [(&str, Criterion, u64); 9] = [
        ("coefficient correctness", c1_coefficients, 10),
        ("concentrated-integral limit", c2_concentrated, 60),
        ("beta independent of parametrization", c3_uniqueness, 30),
        ("boundary-measure phenomenon", c4_boundary_measure, 30),
        ("uniform trace constants", c5_trace, 300),
        ("main convergence", c6_main, 600),
        ("eigenvalue convergence", c7_eigen, 600),
        ("FEM self-verification", c8_fem, 120),
        ("determinism", c9_determinism, 600),
    ];
    let mut failures = Vec::new();
    for (k, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let mut elapsed = start.elapsed();
        // the shared flat_sine ladder counts towards both criteria using it
        if k == 6 {
            elapsed += flat_sine_ladder().1;
        }
        let in_time = elapsed <= Duration::from_secs(limit);
        let passed = v.passed && in_time;
        println!(
            "criterion {} [{}] {name}: {} | runtime {:.1} s (limit {limit} s)",
            k + 1,
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
        if !passed {
            failures.push(k + 1);
        }
    }
    if failures.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: criteria {failures:?} fail");
        std::process::exit(1);
    }
}
