//! `sublinear`: command-line driver for the sub-linear expectation toolkit.
//!
//! Exit status is 0 on success, 1 when a dominance check, experiment verdict
//! or acceptance criterion fails, and 2 on configuration or usage errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(sublinear_core::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<sublinear_core::Error> for CliError {
    fn from(e: sublinear_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Whether the checks a command ran all held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "sublinear",
    version,
    about = "Sub-linear expectations, G-normal solver and limit-theorem experiments"
)]
struct Cli {
    /// Worker threads for path simulation; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides the config file and SUBLINEAR_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GnormalFlags {
    /// Test-function tag, e.g. `sq`, `ramp`, `ball:2`.
    #[arg(long)]
    pub phi: Option<String>,
    /// Lower volatility σ̲ (not squared).
    #[arg(long)]
    pub sigma_lo: Option<f64>,
    /// Upper volatility σ̄ (not squared).
    #[arg(long)]
    pub sigma_hi: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    /// Largest accepted growth order of phi.
    #[arg(long)]
    pub growth_limit: Option<u32>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_paths: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the G-heat equation and write the solution surface.
    SolveGheat {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: GnormalFlags,
        /// Time horizon.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Print the G-normal expectation of a test function.
    EvalGnormal {
        #[command(flatten)]
        flags: GnormalFlags,
        /// Print a JSON object instead of the bare value.
        #[arg(long)]
        json: bool,
    },
    /// Simulate partial sums under a policy family.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a moment or tail inequality against simulation.
    VerifyIneq {
        #[arg(long, conflicts_with_all = ["canned", "calibrate"])]
        config: Option<PathBuf>,
        /// Overrides the bound named in the config.
        #[arg(long)]
        bound: Option<String>,
        /// Run a shipped configuration by name.
        #[arg(long, conflicts_with = "calibrate")]
        canned: Option<String>,
        /// Recompute the calibrated constants instead of checking a bound.
        #[arg(long)]
        calibrate: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Central-limit convergence table.
    RunClt {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Law-of-large-numbers convergence table.
    RunWlln {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Iterated-logarithm trajectories and cluster intervals.
    RunLil {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Classify a step family against the Choquet moment condition.
    CheckMoment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Expectations and Choquet integrals over a scenario set.
    Choquet {
        /// Scenario set JSON.
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        phi: String,
        /// Also report V and v of {phi ≥ threshold}.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run the acceptance criteria.
    Selftest {
        /// Axioms, PDE against the control tree and the Kolmogorov bound at reduced size.
        #[arg(long)]
        quick: bool,
    },
}

fn dispatch(cli: Cli) -> Result<Verdict, CliError> {
    let out = cli.out_dir.as_ref();
    match cli.command {
        Command::SolveGheat { config, flags, t } => {
            commands::solve_gheat(config.as_deref(), &flags, t, out)
        }
        Command::EvalGnormal { flags, json } => commands::eval_gnormal(&flags, json),
        Command::Simulate { config, overrides } => commands::simulate(&config, &overrides, out),
        Command::VerifyIneq {
            config,
            bound,
            canned,
            calibrate,
            overrides,
        } => commands::verify_ineq(
            config.as_deref(),
            bound.as_deref(),
            canned.as_deref(),
            calibrate,
            &overrides,
            out,
        ),
        Command::RunClt { config, overrides } => {
            commands::run_convergence(&config, &overrides, out, false)
        }
        Command::RunWlln { config, overrides } => {
            commands::run_convergence(&config, &overrides, out, true)
        }
        Command::RunLil { config, overrides } => commands::run_lil(&config, &overrides, out),
        Command::CheckMoment { config } => commands::check_moment(&config, out),
        Command::Choquet {
            set,
            phi,
            threshold,
        } => commands::choquet(&set, &phi, threshold),
        Command::Selftest { quick } => Ok(commands::selftest(quick)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(CliError::Config(format!("thread pool: {e}"))),
        },
        None => dispatch(cli),
    };
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
