use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use osclab_cli::{parse_config, run, Configuration, Study};

/// Run convergence studies on a named or configured scenario.
///
/// Exit status is 0 when every check passes, 1 when any check fails and 2
/// for usage or configuration errors.
#[derive(Parser, Debug)]
#[command(name = "osclab", version)]
struct Args {
    /// Configuration file; see README for the format.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Shipped scenario with default settings, instead of a configuration file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum, default_value = "all")]
    study: Study,
    /// Output directory; overrides `[run] out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve ladder levels in parallel.
    #[arg(long)]
    parallel: bool,
    /// Seed of the eigensolver start block; overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<Configuration, String> {
    let mut config = match (&args.config, &args.scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, Some(name)) => Configuration::for_scenario(name).map_err(|e| e.to_string())?,
        (None, None) => return Err("either --config or --scenario is required".into()),
    };
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    eprint!("{}", config.serialize());
    match run(&config, args.study, args.parallel, &config.out) {
        Ok(summary) => {
            for o in &summary.outcomes {
                println!("{:<17} {}", o.study, if o.passed() { "PASS" } else { "FAIL" });
                if let Some(e) = &o.error {
                    println!("  error: {e}");
                }
                for c in o.checks.iter().filter(|c| !c.passed) {
                    println!("  failed: {}: {}", c.name, c.detail);
                }
            }
            println!("summary: {}", summary.summary_path.display());
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
