use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = blockfw::cli::Cli::parse();
    match blockfw::cli::execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
