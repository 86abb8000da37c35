use std::process::ExitCode;

use clap::Parser;
use deloc_cli::args::{Cli, Command};
use deloc_cli::commands;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => commands::cmd_sweep(&args),
        Command::Energy(args) => commands::cmd_energy(&args),
        Command::Verify(args) => commands::cmd_verify(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("deloc: {e}");
            e.exit_code()
        }
    }
}
