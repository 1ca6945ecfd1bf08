use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fluctlab_cli::{CliError, Options, Outcome};

/// Fluctuation theorems for quantum channels: scenario runs, sweeps, batches.
///
/// Exit status: 0 when every residual is below the threshold, 2 on a
/// threshold violation, 1 on input errors.
#[derive(Parser)]
#[command(name = "fluctlab", version)]
struct Cli {
    /// Output directory
    #[arg(long, global = true, default_value = "fluctlab-out")]
    out: PathBuf,
    /// Residual threshold (default 1e-8, or the file's identity_rtol)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Override the seed from the input file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Do not print the summary
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one scenario file
    Run { scenario: PathBuf },
    /// Re-run a scenario for each value of `beta` or `channel.p`
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Evaluate seeded random scenarios from a batch spec
    Batch { spec: PathBuf },
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let opts = Options {
        out: cli.out.clone(),
        tol: cli.tol,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Run { scenario } => fluctlab_cli::run(scenario, &opts),
        Command::Sweep { scenario, param, values } => fluctlab_cli::sweep(scenario, param, values, &opts),
        Command::Batch { spec } => fluctlab_cli::batch(spec, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(outcome) => {
            if !cli.quiet {
                print!("{}", outcome.summary);
            }
            ExitCode::from(outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
