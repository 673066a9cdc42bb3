//! Experiment harness: seeded instance sweeps with optional oracle
//! cross-checks, reported as CSV rows.

use std::io::Write;
use std::time::Instant;

use num_traits::Zero;
use serde::Deserialize;

use crate::error::Error;
use crate::generate::{generate_instance, BudgetDist};
use crate::oracle::brute_force_opt_with_limits;
use crate::rational::{decimal6, format_rat, Rat};
use crate::solver::{mix_seed, Mode, SolverConfig};

/// Oracle guards for benchmark runs; chosen so a sweep stays interactive.
pub const BENCH_ORACLE_MAX_EDGES: usize = 12;
pub const BENCH_ORACLE_MAX_CUSTOMERS: usize = 8;

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    /// Edge counts to sweep.
    pub sizes: Vec<usize>,
    /// Customers per instance.
    pub customers: usize,
    pub budget: BudgetDist,
    /// Trials per size.
    pub trials: usize,
    pub seed: u64,
    pub mode: ModeConfig,
    /// Compute the exact optimum per trial (sizes must fit the guards).
    pub oracle: bool,
    /// Fill the wall-clock column; off yields byte-identical reruns.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Randomized,
    Derandomized,
}

impl From<ModeConfig> for Mode {
    fn from(m: ModeConfig) -> Mode {
        match m {
            ModeConfig::Randomized => Mode::Randomized,
            ModeConfig::Derandomized => Mode::Derandomized,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.trials == 0 {
            return Err(Error::BadConfig("trials must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::BadConfig("sizes must be nonempty".into()));
        }
        if self.sizes.contains(&0) {
            return Err(Error::BadConfig("sizes must be positive".into()));
        }
        if self.oracle {
            if let Some(&m) = self.sizes.iter().find(|&&m| m > BENCH_ORACLE_MAX_EDGES) {
                return Err(Error::BadConfig(format!(
                    "oracle runs need m <= {BENCH_ORACLE_MAX_EDGES}, got {m}"
                )));
            }
            if self.customers > BENCH_ORACLE_MAX_CUSTOMERS {
                return Err(Error::BadConfig(format!(
                    "oracle runs need n <= {BENCH_ORACLE_MAX_CUSTOMERS}, got {}",
                    self.customers
                )));
            }
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "m,n,k,L,revenue,opt,ratio,ratio_dec,guesses,wall_ms,seed";

/// Runs the sweep and writes one CSV row per trial, in trial order.
pub fn run_suite<W: Write>(config: &ExperimentConfig, out: &mut W) -> Result<(), Error> {
    config.validate()?;
    writeln!(out, "{CSV_HEADER}")?;
    for (size_idx, &m) in config.sizes.iter().enumerate() {
        for trial in 0..config.trials {
            let seed = mix_seed(config.seed, size_idx as u64, trial as u64);
            let instance = generate_instance(m, config.customers, &config.budget, seed)?;
            let solver_config = SolverConfig {
                seed,
                ..SolverConfig::default()
            };
            let started = Instant::now();
            let (_, report) =
                crate::classify::solve_full(&instance, config.mode.into(), &solver_config)?;
            let wall_ms = if config.timing {
                started.elapsed().as_millis()
            } else {
                0
            };
            let (opt_col, ratio_col, ratio_dec) = if config.oracle {
                let oracle = brute_force_opt_with_limits(
                    &instance,
                    BENCH_ORACLE_MAX_EDGES,
                    BENCH_ORACLE_MAX_CUSTOMERS,
                )?;
                let ratio = if oracle.opt_revenue.is_zero() {
                    Rat::from_integer(1.into())
                } else {
                    &report.revenue / &oracle.opt_revenue
                };
                (
                    format_rat(&oracle.opt_revenue),
                    format_rat(&ratio),
                    decimal6(&ratio),
                )
            } else {
                (String::new(), String::new(), String::new())
            };
            writeln!(
                out,
                "{m},{n},{k},{l},{revenue},{opt_col},{ratio_col},{ratio_dec},{guesses},{wall_ms},{seed}",
                n = config.customers,
                k = report.k,
                l = report.levels,
                revenue = format_rat(&report.revenue),
                guesses = report.stats.guesses_examined,
            )?;
        }
    }
    Ok(())
}
