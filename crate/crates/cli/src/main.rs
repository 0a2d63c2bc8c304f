use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;

use error::CliError;

/// Model checker for probabilistic timed automata against deterministic
/// timed Rabin automata.
#[derive(Debug, Parser)]
#[command(name = "ptamc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the structural checks on a model file.
    Validate(ModelArgs),
    /// Emit the product of the PTA with the automaton.
    Product(OutputArgs),
    /// Emit the tick-transformed product.
    Tick(OutputArgs),
    /// Emit the region MDP as an explicit-state listing.
    Regions(RegionArgs),
    /// Compute the minimal and maximal acceptance probabilities.
    Check(CheckArgs),
    /// Sample paths under a built-in scheduler.
    Simulate(SimulateArgs),
    /// Generate a benchmark instance.
    Gen(GenArgs),
    /// Cross-check the pipeline against the digital-clocks engine.
    Oracle(OracleArgs),
    /// Sweep a benchmark family and write CSV rows.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// Model file (TOML).
    model: PathBuf,
    /// Complete a non-total automaton with a rejecting sink.
    #[arg(long)]
    complete: bool,
    /// Mode to start the automaton in; defaults to the document's.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write to a file instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Worker threads for value iteration.
    #[arg(long, env = "PTAMC_THREADS", default_value_t = 1)]
    threads: usize,
    /// Convergence threshold of value iteration.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Use one uniform ceiling for all clocks and keep inactive clocks.
    #[arg(long)]
    plain_regions: bool,
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also list the location and region of every state.
    #[arg(long)]
    states: bool,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
    /// Also solve exactly in rational arithmetic (small MDPs only).
    #[arg(long)]
    exact: bool,
    /// Write the maximising and minimising policies as a table.
    #[arg(long)]
    policy: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Task,
    Robot,
    Running,
    TwoTask,
    Robot3x2,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// `fixed:<delay>`, `uniform:<max>` or `greedy:<location>,...`.
    #[arg(long, default_value = "uniform:3")]
    scheduler: String,
    /// Number of moves per path.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of paths, with seeds `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    paths: u64,
    /// Also sample the product under the induced scheduler.
    #[arg(long)]
    product: bool,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of tasks or grid side.
    #[arg(short = 'N', long = "n", visible_alias = "N", default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Largest accepted difference between the two engines.
    #[arg(long, default_value_t = 1e-6)]
    agreement: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    from: usize,
    #[arg(long)]
    to: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV file to append to; standard output otherwise.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Product(a) => commands::product(&a),
        Command::Tick(a) => commands::tick(&a),
        Command::Regions(a) => commands::regions(&a),
        Command::Check(a) => commands::check(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Bench(a) => commands::bench(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(error::USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
