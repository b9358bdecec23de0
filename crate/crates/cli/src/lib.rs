//! Command-line front-end: scenario files, runs and reports.

pub mod config;
pub mod output;
pub mod run;
pub mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use sdmi::metrics::{dis_estimate, hausdorff, DisOptions};
use sdmi::operator::MonotoneOperator;
use sdmi::sets::ConvexSet;

pub use config::ScenarioConfig;
pub use run::{run, Overrides, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    pub const CRITERION: i32 = 2;
    pub const SOLVER: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Solver(_) | CliError::Io(_) => exit::SOLVER,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sdmi", version, about = "Catching-up solver for state-dependent monotone inclusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and write trajectory CSV files and a JSON report.
    Run {
        /// Scenario file (TOML).
        config: Option<PathBuf>,
        /// Built-in scenario name, used instead of a file.
        #[arg(long)]
        scenario: Option<String>,
        /// Step size.
        #[arg(long)]
        h: Option<f64>,
        /// Number of runs h, h/2, …, h/2^(k−1) for a convergence study.
        #[arg(long)]
        refine: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance for the Lyapunov decay check (default 5h).
        #[arg(long)]
        slack: Option<f64>,
    },
    /// List built-in scenarios.
    List,
    /// Hausdorff distance and sampled dis lower bound for two boxes, given as `lo:hi,lo:hi,…`.
    Dis {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Serialize)]
pub struct DisReport {
    pub hausdorff: f64,
    pub dis_lower_bound: f64,
    pub samples: usize,
}

fn parse_box(key: &str, s: &str) -> Result<ConvexSet, CliError> {
    let bad = || CliError::Input(format!("--{key}: expected `lo:hi[,lo:hi…]`, got `{s}`"));
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(',') {
        let (a, b) = part.split_once(':').ok_or_else(bad)?;
        lo.push(a.trim().parse::<f64>().map_err(|_| bad())?);
        hi.push(b.trim().parse::<f64>().map_err(|_| bad())?);
    }
    ConvexSet::interval_product(DVector::from_vec(lo), DVector::from_vec(hi))
        .map_err(|e| CliError::Input(format!("--{key}: {e}")))
}

pub fn dis_report(a: &str, b: &str, budget: usize, seed: u64) -> Result<DisReport, CliError> {
    let (ka, kb) = (parse_box("a", a)?, parse_box("b", b)?);
    let dh = hausdorff(&ka, &kb).map_err(|e| CliError::Input(e.to_string()))?;
    let z = DVector::zeros(ka.dim());
    let est = dis_estimate(
        &MonotoneOperator::normal_cone_fixed(ka),
        &MonotoneOperator::normal_cone_fixed(kb),
        (0.0, &z),
        (0.0, &z),
        budget,
        &DisOptions { seed, ..DisOptions::default() },
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(DisReport {
        hausdorff: dh,
        dis_lower_bound: est.lower_bound,
        samples: est.samples_used,
    })
}

/// Runs a parsed command line and returns the exit code.
pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::List => {
            for name in sdmi::scenarios::BUILTIN_NAMES {
                println!("{name}");
            }
            exit::OK
        }
        Command::Dis { a, b, budget, seed } => match dis_report(&a, &b, budget, seed) {
            Ok(r) => {
                println!("{}", serde_json::to_string_pretty(&r).expect("plain numbers serialize"));
                exit::OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Run { config, scenario, h, refine, out, seed, slack } => {
            let cfg = match (config, scenario) {
                (Some(path), None) => ScenarioConfig::load(&path),
                (None, Some(name)) => ScenarioConfig::builtin(&name),
                (Some(_), Some(_)) => Err(CliError::Input("pass either a config file or --scenario, not both".into())),
                (None, None) => Err(CliError::Input("a config file or --scenario is required".into())),
            };
            let ov = Overrides { h, refine, out, seed, slack };
            match cfg.and_then(|c| run(&c, &ov)) {
                Ok(report) => {
                    for f in &report.trajectory_files {
                        println!("trajectory: {f}");
                    }
                    if let Some(c) = &report.convergence_file {
                        println!("convergence: {c}");
                    }
                    if let Some(d) = &report.decay {
                        println!(
                            "lyapunov decay: {} (max excess {:.3e}, slack {:.3e})",
                            if d.pass { "pass" } else { "FAIL" },
                            d.max_excess,
                            d.slack
                        );
                    }
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    if report.pass {
                        exit::OK
                    } else {
                        exit::CRITERION
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    }
}
