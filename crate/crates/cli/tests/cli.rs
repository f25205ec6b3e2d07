use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osclab_cli::{parse_config, run, Configuration, Study};

fn osclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osclab")).args(args).output().unwrap()
}

fn csv_column(path: &Path, header: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == header).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "scenario = flat_sine\n[profile]\nalpha = 0\n").unwrap();
    let out = osclab(&["--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("alpha"), "{err}");

    assert_eq!(osclab(&["--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
    assert_eq!(osclab(&[]).status.code(), Some(2));
    assert_eq!(osclab(&["--scenario", "moon"]).status.code(), Some(2));
    assert_eq!(
        osclab(&["--scenario", "flat_sine", "--study", "everything"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unperturbed_forcing_gives_zero_distances() {
    // flat_constant has f = g = 0, so both problems are solved by u = 0
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fc.cfg");
    fs::write(&cfg, "scenario = flat_constant\n[ladder]\nlevels = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = osclab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--study",
        "all",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    for col in [
        "h1_distance [H1 norm]",
        "l2_distance [L2 norm]",
        "pairing_gap [H1 norm squared]",
    ] {
        assert!(
            csv_column(&out_dir.join("main.csv"), col).iter().all(|&v| v == 0.0),
            "{col}"
        );
    }
    for file in [
        "coefficients.csv",
        "concentrated_constant.csv",
        "concentrated_varying.csv",
        "boundary_measure.csv",
        "trace.csv",
        "main.csv",
        "eigen.csv",
        "fem_manufactured.csv",
        "fem_neumann.csv",
        "config.txt",
        "summary.txt",
    ] {
        assert!(out_dir.join(file).exists(), "{file}");
    }
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("provenance sha256:") && summary.ends_with("overall PASS\n"));
    // the echoed configuration parses back to itself
    let echoed = parse_config(&fs::read_to_string(out_dir.join("config.txt")).unwrap()).unwrap();
    assert_eq!(echoed.scenario, "flat_constant");
    assert_eq!(echoed.levels, 3);
}

#[test]
fn sawtooth_coefficients_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = Configuration::for_scenario("flat_sawtooth").unwrap();
    let summary = run(&config, Study::Coefficients, false, dir.path()).unwrap();
    assert!(summary.passed());
    let path = dir.path().join("coefficients.csv");
    let closed = csv_column(&path, "gamma_closed [1]");
    let est = csv_column(&path, "gamma_estimate [1]");
    assert_eq!(closed.len(), 32);
    assert!(closed.iter().all(|g| (g - 2f64.sqrt()).abs() < 1e-14));
    assert!(est.iter().all(|g| (g - 2f64.sqrt()).abs() < 1e-2));
}

#[test]
fn failing_study_is_reported_and_others_continue() {
    // no iteration reaches a residual of 1e-300, so every ladder solve fails
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.cfg");
    fs::write(
        &cfg,
        "scenario = flat_sine\n[ladder]\nlevels = 2\n[tolerances]\nnonlinear = 1e-300\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = osclab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--study",
        "all",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(
        summary.contains("== main FAIL") && summary.contains("== eigen FAIL"),
        "{summary}"
    );
    assert!(
        summary.contains("== coefficients PASS") && summary.contains("== trace PASS"),
        "{summary}"
    );
    assert!(summary.ends_with("overall FAIL\n"));
    assert!(out_dir.join("coefficients.csv").exists() && out_dir.join("main.csv").exists());
}

#[test]
fn seed_and_provenance() {
    let mut a = Configuration::for_scenario("annulus_sine").unwrap();
    let b = a.clone();
    assert_eq!(osclab_cli::run::provenance(&a), osclab_cli::run::provenance(&b));
    a.out = "elsewhere".into();
    assert_eq!(osclab_cli::run::provenance(&a), osclab_cli::run::provenance(&b));
    a.seed += 1;
    assert_ne!(osclab_cli::run::provenance(&a), osclab_cli::run::provenance(&b));
    assert_eq!(osclab_cli::run::lab_options(&a, true).eigen.seed, a.seed);
}
