use osclab::assembly::{assemble_h1_operator, boundary_mass, Field};
use osclab::lab::{
    boundary_measure_study, concentrated_limit_study, extend, h1_distance, manufactured_solution_study,
    trace_constant_study, Distance, Extension, LabOptions,
};
use osclab::mesh::{mesh_domain, Mesh};
use osclab::scenario::{Ladder, Scenario};
use osclab::solvers::{dense_generalized, largest_generalized, EigenOptions};

fn meshes(name: &str, eps: f64, h: f64) -> (Scenario<f64>, Mesh<f64>, Mesh<f64>) {
    let sc = Scenario::shipped(name).unwrap();
    let mesh = mesh_domain(&sc, eps, h).unwrap();
    let (base, _) = mesh.restrict_to_base().unwrap();
    (sc, mesh, base)
}

fn short_ladder(mut sc: Scenario<f64>, levels: usize) -> Scenario<f64> {
    sc.ladder = Ladder { eps0: 0.2, levels };
    sc
}

#[test]
fn extension_of_constant_is_constant() {
    for name in ["flat_sine", "annulus_sine"] {
        let (sc, mesh, base) = meshes(name, 0.1, 0.025);
        let u0 = Field {
            values: vec![2.5; base.n_vertices()],
        };
        let e = extend(&u0, &base, &mesh, &sc.chart).unwrap();
        assert!(e.values.iter().all(|&v| (v - 2.5).abs() < 1e-12), "{name}");
    }
}

#[test]
fn extension_reflects_in_the_normal_coordinate() {
    let (sc, mesh, base) = meshes("flat_sine", 0.1, 0.025);
    // u0 = s is linear, so the interpolant reproduces the reflected value exactly
    let u0 = Field {
        values: base.chart_coords.iter().map(|c| c[1]).collect(),
    };
    let e = extend(&u0, &base, &mesh, &sc.chart).unwrap();
    let mut strip_vertices = 0;
    for (v, c) in e.values.iter().zip(&mesh.chart_coords) {
        if c[1] > 0.0 {
            strip_vertices += 1;
            assert!((v + c[1]).abs() < 1e-12, "value {v} at s = {}", c[1]);
        } else {
            assert!((v - c[1]).abs() < 1e-12);
        }
    }
    assert!(strip_vertices > 0);
}

#[test]
fn restriction_after_extension_is_identity() {
    let (sc, mesh, base) = meshes("annulus_sine", 0.05, 0.0125);
    let (_, map) = mesh.restrict_to_base().unwrap();
    let u0 = Field {
        values: base.vertices.iter().map(|p| (p[0] * 3.0).sin() + p[1] * p[1]).collect(),
    };
    let e = Extension::new(&base, &mesh, &sc.chart).unwrap().apply(&u0).unwrap();
    for (i, &v) in map.iter().enumerate() {
        assert_eq!(e.values[v], u0.values[i]);
    }
}

#[test]
fn extension_norm_is_bounded_over_the_ladder() {
    let sc = Scenario::<f64>::shipped("flat_sine").unwrap();
    let mut ratios = Vec::new();
    for k in 0..5 {
        let eps = 0.2 / 2f64.powi(k);
        let mesh = mesh_domain(&sc, eps, sc.mesh.h_for(eps)).unwrap();
        let (base, _) = mesh.restrict_to_base().unwrap();
        let u0: Vec<f64> = base
            .vertices
            .iter()
            .map(|p| (2.0 * p[0]).cos() * (1.0 + p[1]))
            .collect();
        let e = extend(&Field { values: u0.clone() }, &base, &mesh, &sc.chart).unwrap();
        let n_eps = assemble_h1_operator(&mesh).unwrap().a.quadratic_form(&e.values).sqrt();
        let n0 = assemble_h1_operator(&base).unwrap().a.quadratic_form(&u0).sqrt();
        ratios.push(n_eps / n0);
    }
    // reflection across a graph with slope O(1) roughly doubles the energy at worst
    assert!(ratios.iter().all(|&r| (1.0..2.0).contains(&r)), "{ratios:?}");
}

#[test]
fn distance_examples() {
    let (sc, mesh, base) = meshes("flat_sine", 0.1, 0.025);
    let ops = assemble_h1_operator(&mesh).unwrap();
    let u0 = Field {
        values: base.vertices.iter().map(|p| p[0] + 2.0 * p[1]).collect(),
    };
    let e = extend(&u0, &base, &mesh, &sc.chart).unwrap();

    let d = h1_distance(&e, &mesh, &u0, &base, &sc.chart).unwrap();
    assert_eq!((d.h1, d.l2), (0.0, 0.0));

    let hat = mesh.n_vertices() / 2;
    let delta = 0.3;
    let mut bumped = e.clone();
    bumped.values[hat] += delta;
    let d = h1_distance(&bumped, &mesh, &u0, &base, &sc.chart).unwrap();
    let energy = ops.a.get(hat, hat);
    assert!((d.h1 - delta * energy.sqrt()).abs() < 1e-12);

    let c1 = vec![1.5; mesh.n_vertices()];
    let c2 = vec![-0.5; mesh.n_vertices()];
    let d = Distance::between(&ops, &c1, &c2).unwrap();
    let expected = 2.0 * mesh.area().sqrt();
    assert!((d.h1 - expected).abs() < 1e-10 && (d.l2 - expected).abs() < 1e-10);

    assert!(h1_distance(&Field { values: vec![0.0; 3] }, &mesh, &u0, &base, &sc.chart).is_err());
}

#[test]
fn unit_square_trace_constant_matches_dense_oracle() {
    let opts = EigenOptions::default();
    let constant = |n: usize| {
        let mesh = Mesh::<f64>::unit_square(n);
        let ops = assemble_h1_operator(&mesh).unwrap();
        let b = boundary_mass(&mesh, None, |_| 1.0);
        (b, ops.a)
    };
    let (b, a) = constant(8);
    let dense = dense_generalized(&b, &a).unwrap();
    let coarse = *dense.values.last().unwrap();
    let (b, a) = constant(32);
    let fine = largest_generalized(&b, &a, 1, &opts).unwrap().values[0];
    assert!((fine - coarse).abs() / coarse < 1e-2, "{coarse} vs {fine}");
}

#[test]
fn trace_study_on_a_short_ladder() {
    let sc = short_ladder(Scenario::shipped("flat_sawtooth").unwrap(), 3);
    let r = trace_constant_study(&sc, &LabOptions::default()).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    assert_eq!(r.rows.len(), 3);
}

#[test]
fn concentrated_study_examples() {
    let opts = LabOptions::default();
    let sc = Scenario::<f64>::shipped("flat_constant").unwrap();
    let r = concentrated_limit_study(&sc, |_| 1.0, |_| 1.0, &opts).unwrap();
    // strip of thickness 2 eps over a chart of width 2
    for row in &r.rows {
        assert!((row[0] - 4.0).abs() < 1e-10 && row[2] < 1e-10);
    }
    assert!(r.passed());
    let r = concentrated_limit_study(&sc, |_| 0.0, |p| p[0], &opts).unwrap();
    assert!(r.rows.iter().all(|row| row[0] == 0.0 && row[1] == 0.0));
    assert!(r.passed());
}

#[test]
fn boundary_measure_without_oscillation() {
    let sc = Scenario::<f64>::shipped("flat_constant").unwrap();
    let r = boundary_measure_study(&sc, &LabOptions::default()).unwrap();
    let lengths = r.column("length").unwrap();
    assert!(lengths.iter().all(|&l| (l - 2.0).abs() < 1e-12));
    assert!(r.passed());
}

#[test]
fn manufactured_solution_rates() {
    let r = manufactured_solution_study::<f64>(&[8, 16, 32]).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
    let rates = r.rates();
    assert!(rates[0].is_none() && rates[2].unwrap() > 0.9);
}

#[test]
fn report_csv_is_well_formed() {
    let r = manufactured_solution_study::<f64>(&[4, 8]).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), 2 + 2 + 2);
    assert!(header.iter().all(|h| h.ends_with(']')));
    assert_eq!(reader.records().count(), 2);
}
