//! Command-line definitions and value parsers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "floquet-aaw", version, about = "Act-and-wait delayed feedback: Floquet analysis, simulation and gain search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the closed-loop monodromy matrix and classify stability.
    Analyze(SystemArgs),
    /// Simulate the closed loop and compare against the predicted limit.
    Simulate(SimulateArgs),
    /// Search a box of gains for the smallest non-unit spectral radius.
    SearchGain(SearchArgs),
    /// Recompute the reference values of the built-in examples.
    VerifyPaper(NumericArgs),
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    /// RK4 steps per period T.
    #[arg(long, default_value_t = 4000)]
    pub steps_per_period: usize,
    /// Distance from 1 within which an eigenvalue counts as the unit multiplier.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_unit: f64,
    /// Slack on the unit-circle test for the remaining multipliers.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_margin: f64,
    /// Directory for report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Built-in example: ex41, ex42, ex42-ghat, ex42-gbar.
    #[arg(long)]
    pub example: String,
    /// Gain entries, row-major, comma separated.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_list)]
    pub gain: Option<NumberList>,
    /// Switching schedule as wait,act,delay (in periods).
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<(u32, u32, u32)>,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Initial state, comma separated.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_list)]
    pub x0: Option<NumberList>,
    /// Number of act-and-wait cycles to simulate.
    #[arg(long)]
    pub cycles: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Search box, one lo:hi interval per gain entry (row-major).
    #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box)]
    pub bounds: BoxBounds,
    /// Grid points per gain entry.
    #[arg(long, default_value_t = 21)]
    pub grid_points: usize,
    /// Skip the simplex refinement after the grid scan.
    #[arg(long)]
    pub no_refine: bool,
}

/// Comma-separated finite numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberList(pub Vec<f64>);

/// Comma-separated `lo:hi` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds(pub Vec<(f64, f64)>);

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn parse_list(s: &str) -> Result<NumberList, String> {
    s.split(',').map(parse_number).collect::<Result<_, _>>().map(NumberList)
}

pub fn parse_schedule(s: &str) -> Result<(u32, u32, u32), String> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("`{p}` is not a non-negative integer")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [w, a, d] => Ok((w, a, d)),
        _ => Err(format!("expected wait,act,delay, got `{s}`")),
    }
}

pub fn parse_box(s: &str) -> Result<BoxBounds, String> {
    s.split(',')
        .map(|iv| {
            let (lo, hi) = iv.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{iv}`"))?;
            Ok((parse_number(lo)?, parse_number(hi)?))
        })
        .collect::<Result<_, String>>()
        .map(BoxBounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_accept_negative_and_reject_garbage() {
        assert_eq!(parse_list("-1.9,0.9").unwrap().0, vec![-1.9, 0.9]);
        assert!(parse_list("1,,2").is_err());
        assert!(parse_list("inf").is_err());
    }

    #[test]
    fn schedules_need_three_entries() {
        assert_eq!(parse_schedule("1,2,1").unwrap(), (1, 2, 1));
        assert!(parse_schedule("1,2").is_err());
        assert!(parse_schedule("1,-2,1").is_err());
    }

    #[test]
    fn boxes_parse_intervals() {
        assert_eq!(parse_box("0:6,-2:2").unwrap().0, vec![(0.0, 6.0), (-2.0, 2.0)]);
        assert!(parse_box("0-6").is_err());
    }

    #[test]
    fn box_flag_is_required_for_search() {
        assert!(Cli::try_parse_from(["floquet-aaw", "search-gain", "--example", "ex41"]).is_err());
        let cli = Cli::try_parse_from(["floquet-aaw", "search-gain", "--example", "ex41", "--box", "0:6,0:2"]).unwrap();
        let Command::SearchGain(args) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(args.bounds.0, vec![(0.0, 6.0), (0.0, 2.0)]);
    }
}
