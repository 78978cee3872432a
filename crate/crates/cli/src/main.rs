use std::process::ExitCode;

use clap::Parser;
use zne_cli::Cli;

fn main() -> ExitCode {
    match zne_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
