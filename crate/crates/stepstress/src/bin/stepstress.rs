//! Command-line front end: one verb per statistical task, JSON documents
//! by default, `--format csv` for flat numeric tables.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use stepstress::dpd::IntervalCounts;
use stepstress::error::Error;
use stepstress::estimate::{fit_mdpde, fit_restricted_mdpde, FitOptions, LinearConstraint};
use stepstress::exec::Parallelism;
use stepstress::htest::{
    dpd_test_statistic, rao_simple_statistic, rao_statistic, BootstrapOptions,
};
use stepstress::influence::influence_profile;
use stepstress::io;
use stepstress::model::{failure_probabilities, ModelParams, StressPlan};
use stepstress::sim::{level_power_experiment, mse_experiment};

#[derive(Parser)]
#[command(name = "stepstress", version, about = "Robust estimation and testing for step-stress one-shot device data")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format of the primary document.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct PlanArg {
    /// JSON plan file with stress_levels, change_times, inspection_times.
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct CountsArg {
    /// CSV counts file with header cell,count.
    #[arg(long)]
    counts: PathBuf,
}

#[derive(Args)]
struct ParamsArg {
    #[arg(long, allow_negative_numbers = true)]
    theta0: f64,
    #[arg(long, allow_negative_numbers = true)]
    theta1: f64,
}

#[derive(Args)]
struct ConstraintArg {
    /// Constraint vector, two comma-separated reals, e.g. 0,1.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    m: (f64, f64),
    /// Constraint value d in m.theta = d.
    #[arg(long, allow_negative_numbers = true)]
    d: f64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got '{s}'"))?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

#[derive(Subcommand)]
enum Command {
    /// Model cell probabilities at given parameters.
    Probabilities {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        params: ParamsArg,
    },
    /// Unconstrained minimum-divergence fit.
    Fit {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        counts: CountsArg,
        #[arg(long)]
        beta: f64,
    },
    /// Fit restricted to the line m.theta = d.
    FitRestricted {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        counts: CountsArg,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        constraint: ConstraintArg,
    },
    /// Score test of the linear null m.theta = d.
    RaoTest {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        counts: CountsArg,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        constraint: ConstraintArg,
    },
    /// Score test of the simple null theta = (theta0, theta1).
    RaoSimple {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        counts: CountsArg,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        params: ParamsArg,
    },
    /// Divergence-based test with bootstrap calibration.
    DpdTest {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        counts: CountsArg,
        #[arg(long)]
        beta: f64,
        /// Divergence tuning parameter; defaults to beta.
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        constraint: ConstraintArg,
        /// Bootstrap replicate count.
        #[arg(long, default_value_t = 500)]
        boot: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable internal parallelism.
        #[arg(long)]
        sequential: bool,
    },
    /// Influence-function profile across cells.
    Influence {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        beta: f64,
        /// Restrict to the line m.theta = d (optional).
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        m: Option<(f64, f64)>,
        #[arg(long, allow_negative_numbers = true)]
        d: Option<f64>,
    },
    /// Restricted-estimator MSE experiment from a config file.
    SimulateMse {
        #[arg(long)]
        config: PathBuf,
    },
    /// Empirical level/power experiment from a config file.
    SimulatePower {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(document) => {
            let emitted = match &cli.output {
                Some(path) => fs::write(path, document).map_err(Error::from),
                None => {
                    print!("{document}");
                    Ok(())
                }
            };
            match emitted {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => report(&e),
            }
        }
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    let (category, code) = match e {
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) | Error::Json(_) => {
            ("input error", 2)
        }
        Error::NonConvergence { .. }
        | Error::CalibrationFailed { .. }
        | Error::ExperimentFailed { .. } => ("non-convergence", 4),
        _ => ("numerical error", 3),
    };
    eprintln!("stepstress: {category}: {e}");
    ExitCode::from(code)
}

fn run(cli: &Cli) -> Result<String, Error> {
    match &cli.command {
        Command::Probabilities { plan, params } => {
            let plan = io::read_plan(&plan.plan)?;
            let params = ModelParams::new(params.theta0, params.theta1)?;
            let cells = failure_probabilities(&params, &plan);
            match cli.format {
                Format::Json => to_json(&cells),
                Format::Csv => Ok(io::probabilities_csv(cells.probs())),
            }
        }
        Command::Fit { plan, counts, beta } => {
            let (plan, counts) = load(plan, counts)?;
            let fit = fit_mdpde(&counts, &plan, *beta, &FitOptions::default())?;
            to_json(&fit)
        }
        Command::FitRestricted {
            plan,
            counts,
            beta,
            constraint,
        } => {
            let (plan, counts) = load(plan, counts)?;
            let constraint = to_constraint(constraint)?;
            let fit = fit_restricted_mdpde(&counts, &plan, *beta, &constraint, &FitOptions::default())?;
            to_json(&fit)
        }
        Command::RaoTest {
            plan,
            counts,
            beta,
            constraint,
        } => {
            let (plan, counts) = load(plan, counts)?;
            let constraint = to_constraint(constraint)?;
            let outcome = rao_statistic(&counts, &plan, *beta, &constraint)?;
            to_json(&outcome)
        }
        Command::RaoSimple {
            plan,
            counts,
            beta,
            params,
        } => {
            let (plan, counts) = load(plan, counts)?;
            let null = ModelParams::new(params.theta0, params.theta1)?;
            let outcome = rao_simple_statistic(&counts, &plan, *beta, &null)?;
            to_json(&outcome)
        }
        Command::DpdTest {
            plan,
            counts,
            beta,
            tau,
            constraint,
            boot,
            seed,
            sequential,
        } => {
            let (plan, counts) = load(plan, counts)?;
            let constraint = to_constraint(constraint)?;
            let opts = BootstrapOptions {
                replicates: *boot,
                seed: *seed,
                parallelism: if *sequential {
                    Parallelism::Sequential
                } else {
                    Parallelism::Parallel
                },
            };
            let outcome = dpd_test_statistic(&counts, &plan, *beta, *tau, &constraint, &opts)?;
            to_json(&outcome)
        }
        Command::Influence {
            plan,
            params,
            beta,
            m,
            d,
        } => {
            let plan = io::read_plan(&plan.plan)?;
            let params = ModelParams::new(params.theta0, params.theta1)?;
            let constraint = match (m, d) {
                (Some(m), Some(d)) => Some(LinearConstraint::new([m.0, m.1], *d)?),
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidInput(
                        "--m and --d must be given together".into(),
                    ))
                }
            };
            let profile = influence_profile(&params, &plan, *beta, constraint.as_ref())?;
            match cli.format {
                Format::Json => to_json(&profile),
                Format::Csv => Ok(io::influence_csv(&profile)),
            }
        }
        Command::SimulateMse { config } => {
            let config = io::read_config(config)?;
            let summary = mse_experiment(&config)?;
            match cli.format {
                Format::Json => to_json(&summary),
                Format::Csv => Ok(io::mse_summary_csv(&summary)),
            }
        }
        Command::SimulatePower { config } => {
            let config = io::read_config(config)?;
            let summary = level_power_experiment(&config)?;
            match cli.format {
                Format::Json => to_json(&summary),
                Format::Csv => Ok(io::rate_summary_csv(&summary)),
            }
        }
    }
}

fn load(plan: &PlanArg, counts: &CountsArg) -> Result<(StressPlan, IntervalCounts), Error> {
    Ok((io::read_plan(&plan.plan)?, io::read_counts(&counts.counts)?))
}

fn to_constraint(arg: &ConstraintArg) -> Result<LinearConstraint, Error> {
    LinearConstraint::new([arg.m.0, arg.m.1], arg.d)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
