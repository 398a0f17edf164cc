//! `hjmm`: classify, solve, verify and Monte Carlo runs from a JSON config.
//!
//! Exit codes: 0 success; 1 invalid config or runtime error; 2 explosion
//! regime and 3 indeterminate (classify); 4 solver diverged or hit the
//! iteration cap (solve); 5 a verification suite failed (verify); 6 the
//! martingale check failed (mc). The config schema is documented in
//! [`config`].

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{Overrides, EXIT_ERROR};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hjmm", version, about = "HJM-Musiela forward rates driven by Levy noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding `mc.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solve even when the classifier does not report existence.
    #[arg(long, global = true)]
    allow_explosive: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Existence/explosion verdict for the driving noise.
    Classify,
    /// Simulate one path and solve for the forward-rate field.
    Solve,
    /// Run the invariant suites on one path.
    Verify,
    /// Monte Carlo martingale check of discounted bond prices.
    Mc,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HJMM_LOG", "warn")).init();
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(EXIT_ERROR);
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        allow_explosive: cli.allow_explosive,
    };
    let result = match cli.command {
        Command::Classify => commands::classify(&config, &overrides),
        Command::Solve => commands::solve(&config, &overrides),
        Command::Verify => commands::verify(&config, &overrides),
        Command::Mc => commands::mc(&config, &overrides),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
