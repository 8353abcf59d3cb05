//! `corrdyn`: seeded runs of the correspondence analyses from a JSON config.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a numeric
//! operation fails.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{load, Overrides};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "corrdyn", version, about = "Dynamics of polynomial correspondences")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override a config value, e.g. `--set periodic.n_max=5`. Values are
    /// parsed as JSON, falling back to a string.
    #[arg(long = "set", value_name = "PATH=VALUE", global = true)]
    sets: Vec<String>,

    /// Catalog name of the correspondence (e1, e2, chebyshev_pair, cusp).
    #[arg(long, global = true)]
    correspondence: Option<String>,

    /// RNG seed; required by the sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    /// Prefix of the output files.
    #[arg(long, global = true)]
    name: Option<String>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "CORRDYN_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Equilibrium measure by backward sampling or the exact preimage tree.
    Measure,
    /// Periodic points, multipliers and repelling equidistribution.
    Periodic,
    /// Correlation decay under the Perron–Frobenius operator.
    Mixing,
    /// Inverse-branch diameters by path continuation.
    Branches,
    /// Totally invariant set and exceptionality tests.
    Exceptional,
    /// Preimage-set identities and uniqueness-set obstructions.
    Uniqueness,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load(
        cli.config.as_deref(),
        &Overrides {
            sets: cli.sets.clone(),
            seed: cli.seed,
            output_dir: cli.out.clone(),
            name: cli.name.clone(),
            correspondence: cli.correspondence.clone(),
        },
    )?;
    match cli.command {
        Command::Measure => commands::measure(&cfg),
        Command::Periodic => commands::periodic(&cfg),
        Command::Mixing => commands::mixing(&cfg),
        Command::Branches => commands::branches(&cfg),
        Command::Exceptional => commands::exceptional(&cfg),
        Command::Uniqueness => commands::uniqueness(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("corrdyn: {e}");
            e.exit_code()
        }
    }
}
