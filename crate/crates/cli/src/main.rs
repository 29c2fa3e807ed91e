//! Command-line front end: simulate panels, fit the model, and turn draws
//! into plotting tables. Logs go to stderr; data goes to files only.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "prumidas", version, about = "Bayesian mixed-frequency panel regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic panel from a scenario file.
    Simulate(SimulateArgs),
    /// Preprocess the data and run the Gibbs sampler.
    Fit(FitArgs),
    /// Posterior mean, sd and quantiles of every stored parameter.
    Summarize(SummarizeArgs),
    /// Country-level effect quantiles and densities for one covariate.
    Effects(EffectsArgs),
    /// Plug-in volatility paths for every country.
    Volatility(VolatilityArgs),
    /// Effective sample sizes and Geweke scores, per chain.
    Diagnose(RunArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Model configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory holding hourly_<country>.csv files and daily.csv.
    #[arg(long, conflicts_with_all = ["hourly", "daily"])]
    pub data: Option<PathBuf>,
    /// Hourly file of one country, as COUNTRY=PATH; repeat per country.
    #[arg(long, value_name = "COUNTRY=PATH")]
    pub hourly: Vec<String>,
    #[arg(long, requires = "hourly")]
    pub daily: Option<PathBuf>,
    #[arg(long)]
    pub from: Option<NaiveDate>,
    #[arg(long)]
    pub to: Option<NaiveDate>,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub retained: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Keep only posterior means of the random effects.
    #[arg(long)]
    pub no_random_effects: bool,
    /// Run directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RunArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    pub run: PathBuf,
    /// Output directory; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Rescale lambda and chi to geometric mean 1 before summarizing.
    #[arg(long)]
    pub normalize_scales: bool,
}

#[derive(Args)]
pub struct EffectsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub covariate: String,
    #[arg(long, default_value_t = 0)]
    pub lag: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    Daily,
    Hourly,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PlugInArg {
    Mean,
    Median,
}

#[derive(Args)]
pub struct VolatilityArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = AggregateArg::Daily)]
    pub aggregate: AggregateArg,
    #[arg(long, value_enum, default_value_t = PlugInArg::Mean)]
    pub plug_in: PlugInArg,
}

fn exit_code(e: &prumidas::Error) -> u8 {
    match e {
        prumidas::Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
        e if e.is_user_error() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        log::error!("{e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Summarize(a) => commands::summarize(&a),
        Command::Effects(a) => commands::effects(&a),
        Command::Volatility(a) => commands::volatility(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
