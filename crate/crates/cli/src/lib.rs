//! Command-line front end for the `floquet_aaw` library.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use args::{Cli, Command};
use error::CliError;
use output::{write_json, Metadata};

/// Environment variable capping the rayon worker count (0 = automatic).
pub const THREADS_ENV: &str = "FLOQUET_AAW_THREADS";

/// Configures the global thread pool from [`THREADS_ENV`].
pub fn init_threads() -> Result<usize, CliError> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
        Err(_) => 0,
    };
    // Fails only if the pool was already built, which leaves it usable.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(requested).build_global();
    Ok(rayon::current_num_threads())
}

fn out_dir(command: &Command) -> Option<PathBuf> {
    match command {
        Command::Analyze(a) => a.numeric.out.clone(),
        Command::Simulate(a) => a.system.numeric.out.clone(),
        Command::SearchGain(a) => a.system.numeric.out.clone(),
        Command::VerifyPaper(a) => a.out.clone(),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Analyze(_) => "analyze",
        Command::Simulate(_) => "simulate",
        Command::SearchGain(_) => "search-gain",
        Command::VerifyPaper(_) => "verify-paper",
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, arguments: Vec<String>) -> Result<u8, CliError> {
    let threads = init_threads()?;
    let code = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::SearchGain(a) => commands::search_gain(a),
        Command::VerifyPaper(a) => commands::verify(a),
    };
    // Run information goes in its own file so the data files stay
    // byte-identical across runs.
    if let Some(dir) = out_dir(&cli.command) {
        let metadata = Metadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command_name(&cli.command).into(),
            arguments,
            threads,
            unix_time_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let written = write_json(&dir, "metadata.json", &metadata);
        if code.is_ok() {
            written?;
        }
    }
    code
}
