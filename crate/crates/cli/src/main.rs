//! `anondyn`: generate dynamic networks, simulate the counting algorithms on
//! them, verify runs against brute-force references and sweep experiment
//! grids.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "anondyn", version, about = "Counting in anonymous dynamic networks with a leader")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated trace as JSON.
    Generate(GenerateArgs),
    /// Simulate a counting algorithm on a trace.
    Run(RunArgs),
    /// Check traces, ground truths and counting runs against the references.
    Verify(VerifyArgs),
    /// Sweep a parameter grid and write one CSV row per run.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Gn,
    CycleToPath,
    Complete,
    Random,
}

impl FamilyArg {
    fn family(self) -> anondyn_core::adversary::Family {
        use anondyn_core::adversary::Family;
        match self {
            FamilyArg::Gn => Family::LowerBoundGn,
            FamilyArg::CycleToPath => Family::CycleToPath,
            FamilyArg::Complete => Family::StaticComplete,
            FamilyArg::Random => Family::RandomConnected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgArg {
    Stabilizing,
    Terminating,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Input value of the leader (process 1).
    #[arg(long, default_value = "x")]
    leader_value: String,
    /// Input values of the other processes, assigned round-robin.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    values: Vec<String>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    /// Switch round of the cycle-to-path family.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Number of rounds; defaults to 3n.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra random links per round (random family); defaults to n/2.
    #[arg(long)]
    density: Option<usize>,
    /// Chance that an extra link is a self-loop or parallel link.
    #[arg(long, default_value_t = 0.3)]
    multi_prob: f64,
    #[command(flatten)]
    inputs: InputArgs,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    trace: PathBuf,
    #[arg(long, value_enum, default_value = "terminating")]
    alg: AlgArg,
    /// Write the leader's final history as DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the full history tree with anonymities as DOT.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Write the terminating rule's event stream on the leader's final
    /// history as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LowerBoundArg {
    Gn,
    CycleToPath,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Trace files to verify.
    traces: Vec<PathBuf>,
    /// `default` for the generated corpus (or the directory in
    /// $ANONDYN_CORPUS), or a directory of JSON traces.
    #[arg(long)]
    corpus: Option<String>,
    /// Largest n of the generated default corpus.
    #[arg(long, default_value_t = 16)]
    max_n: usize,
    /// Random traces per size and density in the generated default corpus.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    /// Check the indistinguishability structure of a lower-bound family.
    #[arg(long, value_enum, conflicts_with_all = ["traces", "corpus"])]
    lower_bound: Option<LowerBoundArg>,
    #[arg(long, requires = "lower_bound")]
    n: Option<usize>,
    #[arg(long, requires = "lower_bound")]
    m: Option<usize>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON experiment configuration; other grid flags are then ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    family: Vec<FamilyArg>,
    /// Sizes, as a list (`4,6,8`) or range (`4..16`, inclusive).
    #[arg(long, value_parser = commands::parse_list)]
    n: Option<commands::NumList>,
    /// Switch rounds for cycle-to-path, list or range.
    #[arg(long, value_parser = commands::parse_list)]
    m: Option<commands::NumList>,
    /// Seeds for the random family, list or range.
    #[arg(long, value_parser = commands::parse_list)]
    seeds: Option<commands::NumList>,
    #[arg(long, value_enum, value_delimiter = ',')]
    alg: Vec<AlgArg>,
    /// Trace length; defaults to 3n.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    density: Option<usize>,
    #[arg(long)]
    multi_prob: Option<f64>,
    /// CSV output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Run(args) => commands::run(args),
        Command::Verify(args) => commands::verify(args),
        Command::Experiment(args) => commands::experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anondyn: {e}");
            ExitCode::from(e.code())
        }
    }
}
