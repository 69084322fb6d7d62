use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = abprop::cli::Cli::parse();
    match abprop::cli::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
