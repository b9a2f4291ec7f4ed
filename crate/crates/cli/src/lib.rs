//! Command-line pipelines over the `sipforge` library.

pub mod args;
pub mod cmd;
pub mod error;
pub mod manifest;

use sipforge::par::init_thread_pool;
use sipforge::Execution;

use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub const THREADS_ENV: &str = "SIP_FORGE_THREADS";

pub fn parse_threads(value: &str) -> CliResult<usize> {
    value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {value:?}"
        ))
    })
}

/// Bounds the worker pool from `SIP_FORGE_THREADS` when it is set.
pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        init_thread_pool(parse_threads(&v)?);
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::GenPretrain(a) => cmd::pretrain::run(a, exec),
        Command::GenSplit(a) => cmd::split::run(a),
        Command::GenSet(a) => cmd::set::run(a),
        Command::Verify(a) => cmd::verify::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::ProbeOracle(a) => cmd::probe::run_oracle(a, exec),
        Command::ProbeScore(a) => cmd::probe::run_score(a),
        Command::PrefixSim(a) => cmd::prefix_sim::run(a, exec),
        Command::IngestTsv(a) => cmd::ingest::run(a),
    }
}

#[cfg(test)]
pub(crate) fn run_argv(argv: &[&str]) -> CliResult<()> {
    use clap::Parser;
    let cli = Cli::try_parse_from(std::iter::once("sip-forge").chain(argv.iter().copied()))
        .map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_counts() {
        assert_eq!(parse_threads(" 3 ").unwrap(), 3);
        for bad in ["0", "-1", "four", ""] {
            assert_eq!(parse_threads(bad).unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn generation_errors_map_to_three() {
        let e = CliError::Core(sipforge::Error::Quota("x".into()));
        assert_eq!(e.exit_code(), 3);
        assert_eq!(CliError::Core(sipforge::Error::Undefined).exit_code(), 2);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 4);
    }
}
