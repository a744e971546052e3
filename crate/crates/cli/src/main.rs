//! `storyvotes`: calibrate, fit, forecast, simulate and summarize story votes.

mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "storyvotes", version, about = "Model, calibrate and forecast votes on social news stories")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate every site-wide parameter and the interestingness priors.
    Calibrate(commands::calibrate::CalibrateArgs),
    /// Estimate per-story interestingness.
    Fit(commands::fit::FitArgs),
    /// Forecast per-class votes with confidence intervals.
    Predict(commands::predict::PredictArgs),
    /// Generate a synthetic dataset with its ground truth.
    Simulate(commands::simulate::SimulateArgs),
    /// Score forecasts against observed votes.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Descriptive tables: vote types, activity, list ranks and r values.
    Report(commands::report::ReportArgs),
    /// Write the published parameter values as parameter files.
    Reference(commands::OutArgs),
}

/// Input dataset in the three-file layout.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Vote log: story_id,voter_id,unix_time.
    #[arg(long)]
    pub votes: PathBuf,
    /// Fan graph: fan_id,followee_id.
    #[arg(long)]
    pub friends: PathBuf,
    /// Promotion times: story_id,unix_promotion_time.
    #[arg(long)]
    pub promotions: PathBuf,
    /// How wall time maps to Digg time.
    #[arg(long, value_enum, default_value_t = Clock::Activity)]
    pub clock: Clock,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Rescale by site-wide voting activity.
    Activity,
    /// One Digg hour per wall-clock hour.
    Linear,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Calibrate(a) => commands::calibrate::run(&a),
        Command::Fit(a) => commands::fit::run(&a),
        Command::Predict(a) => commands::predict::run(&a),
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Evaluate(a) => commands::evaluate::run(&a),
        Command::Report(a) => commands::report::run(&a),
        Command::Reference(a) => commands::reference(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
