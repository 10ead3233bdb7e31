use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scri_cli::{run, Command, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "scri", version, about = "Characteristic wave solver near null infinity")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed; overrides `rng_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Solve each mode and write the solution grid.
    Solve,
    /// Asymptotic coefficients near null infinity.
    Expand,
    /// Energy identity and H1 estimate audit.
    Audit,
    /// Convergence study over nested grids.
    Converge,
    /// Compare the solver with the series and substitution oracles.
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!(r#"{{"error":"config","exit_code":2,"message":"--config is required"}}"#);
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Expand => Command::Expand,
        Cmd::Audit => Command::Audit,
        Cmd::Converge => Command::Converge,
        Cmd::Oracle => Command::Oracle,
    };
    let outcome = run(&RunOptions { command, config, out: cli.out, seed: cli.seed });
    if let Some(e) = &outcome.error {
        eprintln!("{e}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
