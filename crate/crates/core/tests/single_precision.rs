use osclab::lab::{main_report, manufactured_solution_study, neumann_square_study, solve_ladder, LabOptions};
use osclab::scenario::{Ladder, Scenario};
use osclab::solvers::EigenOptions;

#[test]
fn manufactured_rates_in_f32() {
    let r = manufactured_solution_study::<f32>(&[8, 16, 32]).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
}

#[test]
fn neumann_eigenvalues_in_f32() {
    let r = neumann_square_study::<f32>(32, &EigenOptions::default()).unwrap();
    assert!(r.passed(), "{:?}", r.checks);
}

#[test]
fn short_ladder_in_f32_tracks_f64() {
    fn distances<T: osclab::Real>() -> Vec<f64> {
        let mut sc = Scenario::<T>::shipped("flat_sine").unwrap();
        sc.ladder = Ladder {
            eps0: T::lit(0.2),
            levels: 2,
        };
        let opts = LabOptions {
            control: false,
            ..LabOptions::default()
        };
        let ladder = solve_ladder(&sc, &opts, false).unwrap();
        assert!(ladder.failure.is_none());
        let r = main_report(&ladder);
        r.column("h1_distance")
            .unwrap()
            .iter()
            .map(|v| v.to_f64().unwrap())
            .collect()
    }
    let single = distances::<f32>();
    let double = distances::<f64>();
    for (s, d) in single.iter().zip(&double) {
        assert!((s - d).abs() <= 1e-3 * d, "{s} vs {d}");
    }
}
