use std::process::ExitCode;

use clap::Parser;
use floquet_aaw_cli::args::Cli;
use floquet_aaw_cli::error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CliError::CONFIG_EXIT) } else { ExitCode::SUCCESS };
        }
    };
    match floquet_aaw_cli::run(&cli, std::env::args().skip(1).collect()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
