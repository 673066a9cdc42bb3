//! Command line front end: instance generation, solving, evaluation, the
//! exact oracle, and benchmark sweeps.
//!
//! Exit codes: 0 on success, 2 on validation or I/O errors, 3 when an
//! enumeration cap is exceeded with the sampling fallback disabled.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use tollbooth::bench::{run_suite, ExperimentConfig};
use tollbooth::classify::{classify, solve_full};
use tollbooth::error::Error;
use tollbooth::generate::{generate_instance, BudgetDist};
use tollbooth::io::{
    decomposition_to_dot, instance_from_json, instance_to_json, oracle_to_json, report_to_json,
    scheme_from_json, scheme_to_json,
};
use tollbooth::model::evaluate_revenue;
use tollbooth::oracle::brute_force_opt_with_limits;
use tollbooth::rational::{decimal6, format_rat};
use tollbooth::solver::{Mode, SolverConfig};

#[derive(Parser)]
#[command(name = "tollbooth", about = "Revenue-maximizing edge pricing on trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Randomized,
    Derandomized,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Randomized => Mode::Randomized,
            ModeArg::Derandomized => Mode::Derandomized,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen {
        #[arg(long)]
        edges: usize,
        #[arg(long)]
        customers: usize,
        /// Budgets are integers uniform in 1..=budget-max ...
        #[arg(long, default_value_t = 10)]
        budget_max: u64,
        /// ... unless a denominator bound makes them uniform rationals.
        #[arg(long)]
        budget_denom: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance and write the pricing scheme.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Derandomized)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the solve report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Export the first-level decomposition as Graphviz dot.
        #[arg(long)]
        emit_dot: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        max_guesses: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_choices: u64,
        /// Samples drawn above a cap; 0 turns cap overruns into errors.
        #[arg(long, default_value_t = 64)]
        fallback_trials: u64,
        /// Include wall-clock time in the report.
        #[arg(long, default_value_t = false)]
        timing: bool,
        /// Progress lines on stderr.
        #[arg(long, default_value_t = false)]
        progress: bool,
    },
    /// Evaluate a pricing scheme against an instance.
    Eval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        prices: PathBuf,
    },
    /// Exact optimum by exhaustive search (tiny instances only).
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = tollbooth::oracle::DEFAULT_MAX_EDGES)]
        max_edges: usize,
        #[arg(long, default_value_t = tollbooth::oracle::DEFAULT_MAX_CUSTOMERS)]
        max_customers: usize,
    },
    /// Run an experiment sweep from a JSON config and write CSV rows.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        let code = match e {
            Error::CapExceeded { .. } => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Gen {
            edges,
            customers,
            budget_max,
            budget_denom,
            seed,
            out,
        } => {
            let dist = match budget_denom {
                Some(max_denom) => BudgetDist::UniformRational {
                    max_numer: budget_max,
                    max_denom,
                },
                None => BudgetDist::UniformInt { max: budget_max },
            };
            let instance = generate_instance(edges, customers, &dist, seed)?;
            fs::write(&out, instance_to_json(&instance))?;
            Ok(())
        }
        Command::Solve {
            input,
            mode,
            seed,
            out,
            report,
            emit_dot,
            max_guesses,
            max_choices,
            fallback_trials,
            timing,
            progress,
        } => {
            let instance = instance_from_json(&fs::read_to_string(&input)?)?;
            let config = SolverConfig {
                max_guesses,
                max_choices,
                fallback_trials,
                seed,
                progress,
            };
            let (scheme, solve_report) = solve_full(&instance, mode.into(), &config)?;
            fs::write(&out, scheme_to_json(&scheme))?;
            let report_json = report_to_json(&solve_report, timing);
            if let Some(path) = report {
                fs::write(&path, &report_json)?;
            }
            print!("{report_json}");
            if let Some(path) = emit_dot {
                let classified = classify(&instance)?;
                match classified.levels.first().and_then(|lvl| lvl.first()) {
                    Some(entry) => fs::write(
                        &path,
                        decomposition_to_dot(instance.tree(), &entry.decomposition),
                    )?,
                    None => fs::write(&path, "graph decomposition {\n}\n")?,
                }
            }
            Ok(())
        }
        Command::Eval { input, prices } => {
            let instance = instance_from_json(&fs::read_to_string(&input)?)?;
            let scheme = scheme_from_json(
                &fs::read_to_string(&prices)?,
                instance.tree().edge_count(),
            )?;
            let (total, per_customer) = evaluate_revenue(&instance, &scheme)?;
            let doc = serde_json::json!({
                "revenue": format_rat(&total),
                "revenue_dec": decimal6(&total),
                "per_customer": per_customer.iter().map(format_rat).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(())
        }
        Command::Oracle {
            input,
            max_edges,
            max_customers,
        } => {
            let instance = instance_from_json(&fs::read_to_string(&input)?)?;
            let result = brute_force_opt_with_limits(&instance, max_edges, max_customers)?;
            print!("{}", oracle_to_json(&result));
            Ok(())
        }
        Command::Bench { config, csv } => {
            let config: ExperimentConfig = serde_json::from_str(&fs::read_to_string(&config)?)
                .map_err(|e| Error::BadConfig(e.to_string()))?;
            let mut out = Vec::new();
            run_suite(&config, &mut out)?;
            fs::write(&csv, out)?;
            Ok(())
        }
    }
}
