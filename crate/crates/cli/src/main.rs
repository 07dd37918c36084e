use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match bcnf_cli::run(bcnf_cli::Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code.clamp(1, 255) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
