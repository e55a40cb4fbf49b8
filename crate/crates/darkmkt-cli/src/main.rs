//! `darkmkt`: steady states, stability, prices, statics and simulation from
//! a JSON parameter file.

mod commands;
mod error;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "darkmkt", version, about = "Partially segmented OTC market: equilibrium, stability, prices")]
pub struct Cli {
    /// Seed for every random draw (0 when absent).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for independent work items (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Progress and diagnostics on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Io {
    /// Parameter file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the steady state.
    Solve {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = darkmkt::equilibrium::DEFAULT_TOL)]
        tol: f64,
        /// Also run a multi-start uniqueness scan with this many starts.
        #[arg(long, default_value_t = 0)]
        uniqueness_starts: usize,
    },
    /// Integrate the occupation dynamics (CSV).
    Simulate {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Keep every n-th step.
        #[arg(long, default_value_t = 10)]
        stride: usize,
        /// Initial reduced state, comma separated (default all zeros).
        #[arg(long, value_delimiter = ',')]
        x0: Option<Vec<f64>>,
    },
    /// Stability certificate at the steady state.
    Stability {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 0.5)]
        eps_frac: f64,
    },
    /// Reservation values, prices and seller timing.
    Price {
        #[command(flatten)]
        io: Io,
        /// Masses to price at, comma separated (default: solved steady state).
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        /// Raw bargaining power for the blended effective power.
        #[arg(long)]
        q_hat: Option<f64>,
        #[arg(long, default_value_t = darkmkt::pricing::DAYS_PER_YEAR)]
        days_per_year: f64,
    },
    /// Price along a parameter grid (CSV).
    Sweep {
        #[command(flatten)]
        io: Io,
        /// Parameter path such as lambda.2 or q.
        #[arg(long)]
        param: String,
        /// start:stop:count
        #[arg(long)]
        grid: String,
        /// Asset whose price drives the classification.
        #[arg(long, default_value_t = 1)]
        price: usize,
        /// frozen or self-consistent
        #[arg(long, default_value = "frozen")]
        mode: String,
        /// display or bargain
        #[arg(long, default_value = "display")]
        formula: String,
        /// Warm-start self-consistent solves from the previous point.
        #[arg(long)]
        warm_start: bool,
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
        /// Also write the full sweep result as JSON here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Asymptotic price limits (JSON).
    Limits {
        #[command(flatten)]
        io: Io,
        /// gamma_u, gamma_d, gamma_tilde_d, lambda, gamma_tilde_u or all
        #[arg(long, default_value = "all")]
        kind: String,
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
    },
    /// Agent-based simulation (CSV of proportions).
    Abm {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 10_000)]
        agents: u64,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        sample_dt: f64,
        #[arg(long, default_value_t = 5.0)]
        burn_in: f64,
        /// Independent runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        /// Comparison with the mean-field steady state (JSON).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Solve, certify, price and time; print computed values next to the
    /// reference tables.
    Report {
        #[command(flatten)]
        io: Io,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
