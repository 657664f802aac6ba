//! `fidtrack`: simulate, filter, evaluate and plot fiducial tracking sessions.
//!
//! Exit status: 0 on success, 1 when the data or configuration is rejected,
//! 2 for usage mistakes and I/O failures.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fidtrack_core::metrics::Axis;

#[derive(Parser, Debug)]
#[command(name = "fidtrack", version, about = "Per-fiducial Kalman filtering for optical tracking sessions")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON configuration file; omitted keys keep their built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic session for the configured array.
    Simulate(SimulateArgs),
    /// Run the filter bank over a recorded or simulated session.
    Filter(FilterArgs),
    /// Compare raw and filtered positions against ground truth.
    Evaluate(EvaluateArgs),
    /// Extract one fiducial/axis series as CSV or an SVG chart.
    Report(ReportArgs),
    /// Measure single-thread filter throughput.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Output session file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Session length in seconds.
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Frame rate in Hz.
    #[arg(long, value_name = "HZ")]
    pub fps: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Session file to filter.
    #[arg(value_name = "SESSION")]
    pub input: PathBuf,
    /// Output file for refined positions, NIS and flags.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// NIS gate threshold.
    #[arg(long, value_name = "X")]
    pub gate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Table,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Session file carrying ground truth.
    #[arg(value_name = "TRUTH")]
    pub truth: PathBuf,
    /// Filter output (or a session file, whose measurements are then scored).
    #[arg(value_name = "FILTERED")]
    pub filtered: PathBuf,
    /// Samples excluded from the start of every series.
    #[arg(long, value_name = "N")]
    pub burnout: Option<usize>,
    /// Format printed to standard output.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Also write the report as CSV to this file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Filter output file.
    #[arg(value_name = "FILTERED")]
    pub filtered: PathBuf,
    /// Session file with ground truth to include in the series.
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// Fiducial id as written in the files (0-based).
    #[arg(long, default_value_t = 0)]
    pub fiducial: usize,
    #[arg(long, value_parser = parse_axis, default_value = "x")]
    pub axis: Axis,
    /// Only the last N frames.
    #[arg(long, value_name = "N")]
    pub last: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Frames to process (every frame carries all configured fiducials).
    #[arg(long, default_value_t = 100_000)]
    pub frames: usize,
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    Axis::parse(s).ok_or_else(|| format!("unknown axis `{s}` (expected x, y or z)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&cli.common, &a),
        Command::Filter(a) => commands::filter(&cli.common, &a),
        Command::Evaluate(a) => commands::evaluate(&cli.common, &a),
        Command::Report(a) => commands::report(&a),
        Command::Bench(a) => commands::bench(&cli.common, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fidtrack: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
