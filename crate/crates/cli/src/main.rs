use std::process::ExitCode;

use clap::Parser;
use igabem::{Command, RunConfig};

/// Isogeometric boundary element studies for plane-strain elastostatics.
#[derive(Debug, Parser)]
#[command(name = "igabem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn run(cli: Cli) -> igabem::Result<()> {
    let cfg = RunConfig::resolve(cli.command.settings().clone())?;
    let csv = cli.command.run(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, csv).map_err(|source| igabem::CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("igabem: {e}");
            ExitCode::FAILURE
        }
    }
}
