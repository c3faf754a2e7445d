//! Command-line driver: solve runs, continuation/expansion studies,
//! re-verification of stored output, closed-form audits, and parameter
//! sweeps.
//!
//! Exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
//! 3 solver failure.

mod runner;

use clap::{Args, Parser, Subcommand};
use fastdiff::config::{apply_param, parse_config, CheckSpec, ConfigError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fastdiff", version, about = "Fast diffusion solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one configuration and run its checks
    Solve(CommonArgs),
    /// Shrinking-hole continuation study
    #[command(name = "continue")]
    Continue(CommonArgs),
    /// Expanding-outer-domain study
    Expand(CommonArgs),
    /// Re-run checks on stored output
    Verify(CommonArgs),
    /// Evaluate and audit the closed-form coefficients and barriers
    Barrier(CommonArgs),
    /// Run a parameter grid in parallel
    Sweep(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (required except for `barrier`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance overrides, NAME=VALUE (e.g. --tol mass_balance=1e-9)
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Worker threads for parallel sections
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed override for randomized suites
    #[arg(long)]
    seed: Option<u64>,
}

/// A failure carrying its process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<fastdiff::SolverError> for Failure {
    fn from(e: fastdiff::SolverError) -> Self {
        Failure::solver(e.to_string())
    }
}

impl From<fastdiff::ModelError> for Failure {
    fn from(e: fastdiff::ModelError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<fastdiff::CheckError> for Failure {
    fn from(e: fastdiff::CheckError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<fastdiff::error::RunError> for Failure {
    fn from(e: fastdiff::error::RunError) -> Self {
        use fastdiff::error::RunError;
        fn code(e: &RunError) -> u8 {
            match e {
                RunError::Model(_) | RunError::Check(_) => 2,
                RunError::Solver(_) => 3,
                RunError::InRun { source, .. } => code(source),
            }
        }
        Failure { code: code(&e), message: e.to_string() }
    }
}

impl From<fastdiff::io::IoError> for Failure {
    fn from(e: fastdiff::io::IoError) -> Self {
        Failure::solver(e.to_string())
    }
}

fn parse_tol_overrides(args: &[String]) -> Result<Vec<(String, f64)>, Failure> {
    args.iter()
        .map(|s| {
            let (name, value) = s
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("--tol expects NAME=VALUE, got {s:?}")))?;
            let v: f64 = value
                .parse()
                .map_err(|_| Failure::config(format!("--tol {name}: bad value {value:?}")))?;
            Ok((name.to_string(), v))
        })
        .collect()
}

fn apply_tol_overrides(
    checks: &mut [CheckSpec],
    overrides: &[(String, f64)],
) -> Result<(), Failure> {
    for (name, value) in overrides {
        let mut hit = false;
        for c in checks.iter_mut() {
            match (name.as_str(), c) {
                ("mass_balance", CheckSpec::MassBalance { tol }) => {
                    *tol = *value;
                    hit = true;
                }
                ("l1_contraction", CheckSpec::L1Contraction { tol, .. }) => {
                    *tol = *value;
                    hit = true;
                }
                ("aronson_benilan", CheckSpec::AronsonBenilan { tol, .. }) => {
                    *tol = *value;
                    hit = true;
                }
                ("barrier_lower", CheckSpec::BarrierSandwich { tol_lower, .. }) => {
                    *tol_lower = *value;
                    hit = true;
                }
                ("barrier_upper", CheckSpec::BarrierSandwich { tol_upper, .. }) => {
                    *tol_upper = *value;
                    hit = true;
                }
                ("global_bound", CheckSpec::GlobalBound { tol, .. }) => {
                    *tol = *value;
                    hit = true;
                }
                ("clamp_insensitivity", CheckSpec::ClampInsensitivity { tol, .. }) => {
                    *tol = *value;
                    hit = true;
                }
                _ => {}
            }
        }
        if !hit {
            return Err(Failure::config(format!(
                "--tol {name}: no configured check accepts this tolerance"
            )));
        }
    }
    Ok(())
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut cfg = parse_config(&args.config)?;
    for note in &cfg.notices {
        eprintln!("notice: {note}");
    }
    let overrides = parse_tol_overrides(&args.tol)?;
    apply_tol_overrides(&mut cfg.file.checks, &overrides)?;
    if let Some(seed) = args.seed {
        cfg.file.run.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        // a pool may already exist when embedded in tests; that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(cfg)
}

fn require_out(args: &CommonArgs) -> Result<PathBuf, Failure> {
    args.out
        .clone()
        .ok_or_else(|| Failure::config("--out DIR is required for this subcommand"))
}

fn dispatch(cmd: &Cmd) -> Result<Vec<fastdiff::verify::CheckReport>, Failure> {
    match cmd {
        Cmd::Solve(args) => {
            let cfg = load_config(args)?;
            runner::run_solve(&cfg, &require_out(args)?)
        }
        Cmd::Continue(args) => {
            let cfg = load_config(args)?;
            runner::run_continuation(&cfg, &require_out(args)?)
        }
        Cmd::Expand(args) => {
            let cfg = load_config(args)?;
            runner::run_expansion(&cfg, &require_out(args)?)
        }
        Cmd::Verify(args) => {
            let cfg = load_config(args)?;
            runner::run_verify(&cfg, &require_out(args)?)
        }
        Cmd::Barrier(args) => {
            let cfg = load_config(args)?;
            runner::run_barrier_audit(&cfg, args.out.as_deref())
        }
        Cmd::Sweep(args) => {
            let cfg = load_config(args)?;
            let overrides = parse_tol_overrides(&args.tol)?;
            runner::run_sweep(&cfg, &require_out(args)?, &overrides, &|file, p, v| {
                apply_param(file, p, v).map_err(Failure::from)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(reports) => {
            let mut failed = 0usize;
            for r in &reports {
                println!(
                    "{}: {} (worst margin {:.3e}, tolerance {:.1e}, {} samples)",
                    r.name,
                    if r.pass { "PASS" } else { "FAIL" },
                    r.worst_margin,
                    r.tolerance,
                    r.samples
                );
                if !r.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                eprintln!("{failed} check(s) failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
