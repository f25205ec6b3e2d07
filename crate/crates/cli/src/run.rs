//! Study dispatch and artifact writing.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use osclab::lab::{
    boundary_measure_study, coefficient_study, concentrated_limit_study, eigen_report, main_report,
    manufactured_solution_study, neumann_square_study, solve_ladder, trace_constant_study, Check, ConvergenceReport,
    LabOptions,
};
use osclab::scenario::Scenario;

use crate::config::Configuration;

type PointFn = fn([f64; 2]) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Study {
    Coefficients,
    Concentrated,
    BoundaryMeasure,
    Trace,
    Main,
    Eigen,
    /// Discretization checks on the unit square, independent of the scenario.
    Fem,
    All,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Coefficients => "coefficients",
            Study::Concentrated => "concentrated",
            Study::BoundaryMeasure => "boundary_measure",
            Study::Trace => "trace",
            Study::Main => "main",
            Study::Eigen => "eigen",
            Study::Fem => "fem",
            Study::All => "all",
        }
    }

    fn expand(self) -> Vec<Study> {
        match self {
            Study::All => vec![
                Study::Fem,
                Study::Coefficients,
                Study::Concentrated,
                Study::BoundaryMeasure,
                Study::Trace,
                Study::Main,
                Study::Eigen,
            ],
            s => vec![s],
        }
    }
}

/// Result of one study: its verdict, checks and notes, the files written,
/// and the error that stopped it, if any.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub study: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
    pub error: Option<String>,
}

impl Outcome {
    fn new(study: &str) -> Self {
        Self {
            study: study.into(),
            checks: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
            error: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    fn absorb(&mut self, label: Option<&str>, report: &ConvergenceReport<f64>) {
        let prefix = label.map(|l| format!("{l}: ")).unwrap_or_default();
        self.checks.extend(report.checks.iter().map(|c| Check {
            name: format!("{prefix}{}", c.name),
            ..c.clone()
        }));
        self.notes.extend(report.notes.iter().map(|n| format!("{prefix}{n}")));
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub provenance: String,
    pub outcomes: Vec<Outcome>,
    pub summary_path: PathBuf,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(Outcome::passed)
    }
}

/// Lab options derived from the configuration.
pub fn lab_options(config: &Configuration, parallel: bool) -> LabOptions<f64> {
    let mut opts = LabOptions::<f64>::default();
    let t = &config.tolerances;
    opts.estimator.tolerance = t.estimator;
    opts.uniqueness.tolerance = t.estimator;
    opts.nonlinear.tol = t.nonlinear;
    opts.nonlinear.linear.tol = t.linear;
    opts.eigen.tol = t.eigen;
    opts.eigen.seed = config.seed;
    opts.eigen_count = config.eigen_count;
    opts.control = config.control;
    opts.parallel = parallel;
    opts
}

/// SHA-256 of the canonical configuration, which spells out the ladder,
/// tolerances and seed. The output directory is left out: it does not
/// affect any computed value.
pub fn provenance(config: &Configuration) -> String {
    let inputs = Configuration {
        out: PathBuf::new(),
        ..config.clone()
    };
    hex::encode(Sha256::digest(inputs.serialize().as_bytes()))
}

fn write_report(out: &Path, file: &str, report: &ConvergenceReport<f64>, outcome: &mut Outcome) -> Result<(), String> {
    let path = out.join(file);
    let f = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    report.write_csv(BufWriter::new(f)).map_err(|e| e.to_string())?;
    outcome.files.push(path);
    Ok(())
}

fn run_study(
    study: Study,
    sc: &Scenario<f64>,
    opts: &LabOptions<f64>,
    out: &Path,
    shared: &mut Option<osclab::lab::SolutionLadder<f64>>,
) -> Outcome {
    let mut outcome = Outcome::new(study.name());
    if let Err(e) = run_into(study, sc, opts, out, shared, &mut outcome) {
        outcome.error = Some(e);
    }
    outcome
}

fn run_into(
    study: Study,
    sc: &Scenario<f64>,
    opts: &LabOptions<f64>,
    out: &Path,
    shared: &mut Option<osclab::lab::SolutionLadder<f64>>,
    outcome: &mut Outcome,
) -> Result<(), String> {
    let e = |e: osclab::Error| e.to_string();
    match study {
        Study::Coefficients => {
            let r = coefficient_study(sc, opts).map_err(e)?;
            let path = out.join("coefficients.csv");
            let f = File::create(&path).map_err(|err| format!("{}: {err}", path.display()))?;
            r.write_csv(BufWriter::new(f)).map_err(e)?;
            outcome.files.push(path);
            outcome.checks.extend(r.checks);
        }
        Study::Concentrated => {
            let pairs: [(&str, PointFn, PointFn); 2] = [
                ("constant", |_| 1.0, |_| 1.0),
                ("varying", |p| 1.0 + 0.5 * p[0], |p| p[1].cos()),
            ];
            // a failing pair does not stop the other
            let mut errors = Vec::new();
            for (label, h, phi) in pairs {
                match concentrated_limit_study(sc, h, phi, opts) {
                    Ok(r) => {
                        outcome.absorb(Some(label), &r);
                        write_report(out, &format!("concentrated_{label}.csv"), &r, outcome)?;
                    }
                    Err(err) => errors.push(format!("{label}: {err}")),
                }
            }
            if !errors.is_empty() {
                return Err(errors.join("; "));
            }
        }
        Study::BoundaryMeasure => {
            let r = boundary_measure_study(sc, opts).map_err(e)?;
            outcome.absorb(None, &r);
            write_report(out, "boundary_measure.csv", &r, outcome)?;
        }
        Study::Trace => {
            let r = trace_constant_study(sc, opts).map_err(e)?;
            outcome.absorb(None, &r);
            write_report(out, "trace.csv", &r, outcome)?;
        }
        Study::Main | Study::Eigen => {
            let with_eigen = study == Study::Eigen;
            let reuse = shared.as_ref().is_some_and(|l| !with_eigen || has_eigen(l));
            if !reuse {
                *shared = Some(solve_ladder(sc, opts, with_eigen).map_err(e)?);
            }
            let ladder = shared.as_ref().expect("ladder was just solved");
            let (r, file) = if with_eigen {
                (eigen_report(ladder), "eigen.csv")
            } else {
                (main_report(ladder), "main.csv")
            };
            outcome.absorb(None, &r);
            write_report(out, file, &r, outcome)?;
        }
        Study::Fem => {
            let mms = manufactured_solution_study::<f64>(&[8, 16, 32, 64]).map_err(e)?;
            outcome.absorb(Some("manufactured"), &mms);
            write_report(out, "fem_manufactured.csv", &mms, outcome)?;
            let neu = neumann_square_study::<f64>(64, &opts.eigen).map_err(e)?;
            outcome.absorb(Some("neumann"), &neu);
            write_report(out, "fem_neumann.csv", &neu, outcome)?;
        }
        Study::All => unreachable!("expanded before dispatch"),
    }
    Ok(())
}

fn has_eigen(l: &osclab::lab::SolutionLadder<f64>) -> bool {
    l.levels.first().is_some_and(|lv| lv.eigenvalues.is_some())
}

/// Runs `study` (every study for [`Study::All`]) and writes one CSV per
/// report plus `config.txt` and `summary.txt` into `out`. A failing study
/// does not stop the others. Timings go to stderr so the artifacts depend on
/// the inputs alone.
pub fn run(config: &Configuration, study: Study, parallel: bool, out: &Path) -> Result<RunSummary, String> {
    let sc = config.build_scenario().map_err(|e| e.to_string())?;
    let opts = lab_options(config, parallel);
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let canonical = config.serialize();
    fs::write(out.join("config.txt"), &canonical).map_err(|e| e.to_string())?;
    let provenance = provenance(config);

    let studies = study.expand();
    // main and eigen share one ladder, solved once with eigenvalues
    let mut shared = None;
    if studies.contains(&Study::Main) && studies.contains(&Study::Eigen) {
        let start = Instant::now();
        match solve_ladder(&sc, &opts, true) {
            Ok(l) => shared = Some(l),
            Err(e) => eprintln!("shared ladder failed: {e}"),
        }
        eprintln!("ladder solved in {:.1?}", start.elapsed());
    }

    let mut outcomes = Vec::new();
    for s in studies {
        let start = Instant::now();
        let outcome = run_study(s, &sc, &opts, out, &mut shared);
        eprintln!(
            "{:<17} {} in {:.1?}",
            s.name(),
            if outcome.passed() { "pass" } else { "FAIL" },
            start.elapsed()
        );
        outcomes.push(outcome);
    }

    let summary_path = out.join("summary.txt");
    let summary = RunSummary {
        provenance,
        outcomes,
        summary_path: summary_path.clone(),
    };
    fs::write(&summary_path, render_summary(config, &summary)).map_err(|e| e.to_string())?;
    Ok(summary)
}

/// Plain-text summary: provenance, then every check and note per study.
pub fn render_summary(config: &Configuration, s: &RunSummary) -> String {
    let mut t = String::new();
    let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
    let _ = writeln!(t, "scenario {}", config.scenario);
    let _ = writeln!(t, "provenance sha256:{}", s.provenance);
    let _ = writeln!(
        t,
        "ladder eps0 {:e} levels {} | tolerances nonlinear {:e} linear {:e} eigen {:e} estimator {:e} | seed {}",
        config.eps0,
        config.levels,
        config.tolerances.nonlinear,
        config.tolerances.linear,
        config.tolerances.eigen,
        config.tolerances.estimator,
        config.seed
    );
    for o in &s.outcomes {
        let _ = writeln!(t, "\n== {} {}", o.study, verdict(o.passed()));
        if let Some(e) = &o.error {
            let _ = writeln!(t, "  error: {e}");
        }
        for c in &o.checks {
            let _ = writeln!(t, "  [{}] {}: {}", verdict(c.passed), c.name, c.detail);
        }
        for n in &o.notes {
            let _ = writeln!(t, "  note: {n}");
        }
        for f in &o.files {
            let name = f
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let _ = writeln!(t, "  wrote {name}");
        }
    }
    let _ = writeln!(t, "\noverall {}", verdict(s.passed()));
    t
}
