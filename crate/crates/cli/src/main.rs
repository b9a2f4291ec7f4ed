use std::process::ExitCode;

use clap::Parser;
use sipforge_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match sipforge_cli::configure_threads().and_then(|()| sipforge_cli::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
