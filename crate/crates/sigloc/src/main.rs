use std::process::ExitCode;

use clap::Parser;
use sigloc::Cli;

fn main() -> ExitCode {
    match sigloc::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sigloc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
