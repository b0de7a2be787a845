mod batch;
mod bench;
mod error;
mod input;
mod simulate;
mod test_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lingof::gof::Method;

use crate::error::{CliError, CliResult};

/// Goodness-of-fit tests for linear non-Gaussian SEMs with latent confounders.
#[derive(Debug, Parser)]
#[command(name = "lingof", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test one data file against the model with a given number of confounders.
    Test(TestArgs),
    /// Test every file of a directory with l = 0 and l = 1 and classify it.
    Batch(BatchArgs),
    /// Run a simulation study from a JSON configuration.
    Simulate(SimulateArgs),
    /// Time the tests on simulated data.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Delimited numeric table, one observation per row.
    pub file: PathBuf,
    #[arg(short, long, default_value_t = 0)]
    pub latents: usize,
    /// cr_only, cr_plus_second or ustat_all (also i, ii, iii). Defaults by p.
    #[arg(short, long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(short, long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(short, long, default_value_t = 0)]
    pub seed: u64,
    /// Print the full result as JSON.
    #[arg(long)]
    pub json: bool,
    /// Write the JSON result to this file instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Drop wall-clock timings so that the JSON is byte-reproducible.
    #[arg(long)]
    pub no_timings: bool,
    #[arg(long)]
    pub bootstrap_reps: Option<usize>,
    #[arg(long)]
    pub mc_draws: Option<usize>,
    /// Expected number of sampled tuples for the U-statistic (default 2n).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub ustat_reps: Option<usize>,
    /// Work with raw rather than unit-variance cumulants.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    pub dir: PathBuf,
    /// Confounder counts to test, a subset of {0, 1} containing 0.
    #[arg(short, long, value_delimiter = ',', default_values_t = [0usize, 1])]
    pub latents: Vec<usize>,
    #[arg(short, long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(short, long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Write the table here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write a JSON run manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Study configuration (JSON).
    pub config: PathBuf,
    /// Directory for `<name>.csv` and `<name>.manifest.json`.
    #[arg(short, long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(short, long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    pub p: Vec<usize>,
    #[arg(short, long, default_value_t = 20)]
    pub reps: usize,
    #[arg(short, long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(short, long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: lingof::Error| e.to_string())
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("LINGOF_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("LINGOF_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::input(format!("cannot set up {threads} threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Test(args) => test_cmd::run(&args),
        Command::Batch(args) => batch::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Bench(args) => bench::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
