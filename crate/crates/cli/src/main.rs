mod args;
mod commands;
mod error;
mod model_config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn run(cli: Cli) -> Result<(), error::CliError> {
    match cli.command {
        Command::ListModels => print!("{}", commands::list_models()?),
        Command::Analyze(args) => {
            for path in commands::analyze(&args)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Converge(args) => {
            for path in commands::converge(&args)? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
