//! `freebound` experiment driver.
//!
//! Exit codes: 0 success, 1 verification failed, 2 configuration error, 3 numerical error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use config::{load, split_overrides, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "freebound", version, about = "American puts under jump diffusions: solver and exercise-boundary lab", after_help = SCHEMA)]
struct Cli {
    /// TOML experiment config (defaults are used when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve the obstacle problem: surface and boundary CSVs.
    Solve,
    /// Run the approximating scheme with a frozen jump source.
    Iterate,
    /// Regularity diagnostics: JSON report and CSV.
    Diagnose,
    /// Volterra equation for the boundary trace of d(du/dt)/dx.
    Volterra,
    /// Monte Carlo: European price, martingale check, boundary-policy value.
    Mc,
    /// Run the acceptance suite and print a PASS/FAIL table.
    Verify,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut cfg = match load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Context::new(cfg);
    let outcome = match cli.command {
        Command::Solve => commands::solve(&ctx).map(|_| true),
        Command::Iterate => commands::iterate_cmd(&ctx).map(|_| true),
        Command::Diagnose => commands::diagnose_cmd(&ctx).map(|_| true),
        Command::Volterra => commands::volterra_cmd(&ctx).map(|_| true),
        Command::Mc => commands::mc_cmd(&ctx).map(|_| true),
        Command::Verify => commands::verify_cmd(&ctx),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
