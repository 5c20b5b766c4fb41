//! Library side of the `wvote` command-line tool.
//!
//! Every subcommand is a plain function writing to a caller-supplied sink, so
//! the binary and the test suites share one code path.

pub mod commands;
pub mod experiment;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Bad arguments, unreadable or invalid configuration, out-of-range input.
    pub const INPUT: i32 = 2;
    /// Failures while running: simulation errors, unwritable output.
    pub const RUNTIME: i32 = 3;
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        CliError::Input(e.into())
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        CliError::Runtime(e.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Runtime(_) => exit::RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Output directory used when neither `--out` nor the environment variable is set.
pub const DEFAULT_OUTPUT_DIR: &str = "wvote-output";
pub const OUTPUT_DIR_ENV: &str = "WVOTE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "wvote",
    version,
    about = "Weighted majority voting for proof-of-stake committees",
    after_help = "Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.\n\
                  Output directory: --out, else $WVOTE_OUTPUT_DIR, else ./wvote-output."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-odds weights of a committee, raw and normalized.
    Weights(ProfilesArg),
    /// Welfare-optimal quota of a committee.
    Quota {
        #[command(flatten)]
        profiles: ProfilesArg,
        #[command(flatten)]
        welfare: WelfareArgs,
    },
    /// Probability that a rule reaches the correct outcome.
    Prob(ProbArgs),
    /// Outcome of one weighted vote.
    Decide(DecideArgs),
    /// Tolerance constants of the profile update, and a verdict for a mix.
    Tolerance(ToleranceArgs),
    /// Run one experiment configuration.
    Simulate(SimulateArgs),
    /// Run several experiment configurations concurrently.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ProfilesArg {
    /// Voting profiles, e.g. `0.9 0.9 0.6`. Commas also separate values.
    #[arg(value_delimiter = ',', allow_negative_numbers = true)]
    pub profiles: Vec<f64>,
    /// Read profiles from a file (whitespace or comma separated) instead.
    #[arg(long, conflicts_with = "profiles")]
    pub file: Option<PathBuf>,
    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct WelfareArgs {
    /// Prior probability of an invalid block.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Loss for rejecting a valid block.
    #[arg(long = "lr", default_value_t = 1e-2)]
    pub loss_reject_valid: f64,
    /// Loss for approving an invalid block.
    #[arg(long = "la", default_value_t = 12.0)]
    pub loss_accept_invalid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleKind {
    /// Count of approvals against the quota.
    Unweighted,
    /// Given weights (or log-odds weights when none are given) against the quota.
    Weighted,
    /// Log-odds weights with the welfare-optimal quota.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValidityArg {
    Valid,
    Invalid,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    #[command(flatten)]
    pub profiles: ProfilesArg,
    #[arg(long, value_enum, default_value_t = RuleKind::Optimal)]
    pub rule: RuleKind,
    /// Quota for the unweighted and weighted rules.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub quota: f64,
    /// Weights for the weighted rule.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[command(flatten)]
    pub welfare: WelfareArgs,
    #[arg(long, value_enum, default_value_t = ValidityArg::Valid)]
    pub validity: ValidityArg,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Compare against the binomial tail; needs identical profiles and the
    /// unweighted rule.
    #[arg(long)]
    pub condorcet_check: bool,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    /// Votes as +1 / -1, e.g. `--votes 1,-1,1`.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        required = true
    )]
    pub votes: Vec<i8>,
    /// Explicit weights.
    #[arg(long, value_delimiter = ',', conflicts_with = "profiles")]
    pub weights: Option<Vec<f64>>,
    /// Profiles to derive log-odds weights from.
    #[arg(long, value_delimiter = ',')]
    pub profiles: Option<Vec<f64>>,
    /// A number in [0.5, 1], or `optimal` (needs --profiles).
    #[arg(long, default_value = "optimal")]
    pub quota: String,
    #[command(flatten)]
    pub welfare: WelfareArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long = "lr", default_value_t = 1e-2)]
    pub loss_reject_valid: f64,
    #[arg(long = "la", default_value_t = 12.0)]
    pub loss_accept_invalid: f64,
    /// Fraction of correct votes.
    #[arg(long, requires = "q1")]
    pub q: Option<f64>,
    /// Fraction of abstentions on valid blocks.
    #[arg(long, requires = "q")]
    pub q1: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (TOML). Without one the default blocked-voter
    /// scenario runs.
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write a gnuplot script plotting the CSV output.
    #[arg(long)]
    pub gnuplot_script: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Configurations to run; each gets its own subdirectory named after it.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Run every configuration once per seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub gnuplot_script: bool,
}

pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Executes a parsed command line.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Weights(args) => commands::weights(&args, out),
        Command::Quota { profiles, welfare } => commands::quota(&profiles, welfare, out),
        Command::Prob(args) => commands::prob(&args, out),
        Command::Decide(args) => commands::decide(&args, out),
        Command::Tolerance(args) => commands::tolerance(&args, out),
        Command::Simulate(args) => {
            let dir = output_dir(args.out);
            let run = experiment::run_config_file(
                args.config.as_deref(),
                &dir,
                args.seed,
                args.gnuplot_script,
            )?;
            writeln!(out, "{}", run.report()).map_err(CliError::runtime)
        }
        Command::Sweep(args) => {
            let dir = output_dir(args.out);
            let runs = experiment::sweep(
                &args.configs,
                &dir,
                args.seeds.as_deref(),
                args.gnuplot_script,
            )?;
            for run in runs {
                writeln!(out, "{}", run.report()).map_err(CliError::runtime)?;
            }
            Ok(())
        }
    }
}
