// NaN-rejecting guards are written as !(x > a).
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod svg;

use commands::Failure;

#[derive(Parser)]
#[command(
    name = "touchdown",
    version,
    about = "Pull-in voltage and touchdown solutions for radial MEMS models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Model configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory (overrides [output] dir).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Run even if the hypothesis checks fail.
    #[arg(long)]
    pub force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model hypotheses.
    Validate(Common),
    /// Solve for one voltage by monotone iteration from zero.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "X", allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Bounds and bisection bracket for the pull-in voltage.
    Pullin {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "W", default_value_t = 1e-3)]
        width: f64,
        /// Repeat the bisection on these grid sizes.
        #[arg(long, value_name = "M,...", value_delimiter = ',')]
        refine: Vec<usize>,
    },
    /// Sweep the minimal branch on an even voltage grid.
    Branch {
        #[command(flatten)]
        common: Common,
        /// Largest voltage of the sweep; defaults to the upper end of the bisection bracket.
        #[arg(long, value_name = "X", allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, value_name = "N", default_value_t = 32)]
        points: usize,
        #[arg(long, value_name = "N", default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_name = "W", default_value_t = 1e-3)]
        width: f64,
    },
    /// Fit the near-origin power law of the touchdown solution.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "R", default_value_t = touchdown_core::asymptotics::DEFAULT_WINDOW.0)]
        window_lo: f64,
        #[arg(long, value_name = "R", default_value_t = touchdown_core::asymptotics::DEFAULT_WINDOW.1)]
        window_hi: f64,
    },
    /// Shoot the singular solution backward from the seed time.
    Shoot(Common),
    /// Compare the bisection bracket with the shooting voltage.
    Crosscheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "W", default_value_t = 1e-3)]
        width: f64,
        /// Largest accepted relative discrepancy, as a fraction or with a % sign.
        #[arg(long, value_name = "T", default_value = "2%", value_parser = parse_threshold)]
        threshold: f64,
    },
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let (num, scale) = match s.strip_suffix('%') {
        Some(p) => (p, 0.01),
        None => (s, 1.0),
    };
    match num.trim().parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v * scale),
        _ => Err(format!(
            "expected a non-negative number or percentage, got '{s}'"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(common) => commands::validate(&common),
        Command::Solve { common, lambda } => commands::solve(&common, lambda),
        Command::Pullin {
            common,
            width,
            refine,
        } => commands::pullin(&common, width, &refine),
        Command::Branch {
            common,
            lambda,
            points,
            jobs,
            width,
        } => commands::branch(&common, lambda, points, jobs, width),
        Command::Asymptotics {
            common,
            window_lo,
            window_hi,
        } => commands::asymptotics(&common, (window_lo, window_hi)),
        Command::Shoot(common) => commands::shoot(&common),
        Command::Crosscheck {
            common,
            width,
            threshold,
        } => commands::crosscheck(&common, width, threshold),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
