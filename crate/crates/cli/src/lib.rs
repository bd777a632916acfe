//! Experiment driver behind the `karel` binary.
//!
//! Every subcommand resolves its settings (flags, then the `--config`
//! file, then defaults), computes all of its documents in memory and only
//! then writes them, so a failed run leaves no partial output behind.

pub mod commands;
pub mod config;
pub mod fit;
pub mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::execute;

#[derive(Debug, Parser)]
#[command(name = "karel", version, about = "Program search over the Karel DSL")]
pub struct Cli {
    /// Settings file of `key = value` lines; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw programs from the probabilistic grammar, one per line.
    Sample(SampleArgs),
    /// Score programs on a task's seeded initial states.
    Eval(EvalArgs),
    /// Hill climbing with restarts, one record per (task, seed).
    Search(SearchArgs),
    /// Behavior-similarity, identity-rate or convergence-rate estimates.
    Metrics(MetricsArgs),
}

/// Flags shared by commands that draw programs.
#[derive(Debug, Default, Args)]
pub struct GrammarArgs {
    #[arg(long)]
    pub max_depth: Option<String>,
    #[arg(long)]
    pub max_chain: Option<String>,
    #[arg(long)]
    pub max_tokens: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct SampleArgs {
    /// Number of programs.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[command(flatten)]
    pub grammar: GrammarArgs,
    /// Also report production frequencies and chi-square fits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stats: Option<String>,
    /// Output path, `-` for standard output.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct EvalArgs {
    /// File with one program per line; `#` lines are ignored.
    #[arg(long)]
    pub program: Option<String>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub num_states: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub crashable: Option<String>,
    #[arg(long)]
    pub max_actions: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct SearchArgs {
    /// Comma-separated task ids, or `all`.
    #[arg(long)]
    pub tasks: Option<String>,
    /// Seeds such as `0-7` or `1,5,9`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long)]
    pub num_states: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub crashable: Option<String>,
    /// Return at which a record stops early, or `none`.
    #[arg(long)]
    pub stop_at: Option<String>,
    #[command(flatten)]
    pub grammar: GrammarArgs,
    /// Prefix of the `.jsonl`, `.curve.csv` and `.summary.csv` outputs.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricMode {
    Behavior,
    Identity,
    Convergence,
}

#[derive(Debug, Default, Args)]
pub struct MetricsArgs {
    /// Which estimator to run; may also come from the config file.
    #[arg(value_enum)]
    pub mode: Option<MetricMode>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Mutation counts for behavior and identity, such as `1-10`.
    #[arg(long)]
    pub n_mut: Option<String>,
    #[arg(long)]
    pub programs: Option<String>,
    /// Random maps per program for behavior-similarity.
    #[arg(long)]
    pub states: Option<String>,
    #[arg(long)]
    pub height: Option<String>,
    #[arg(long)]
    pub width: Option<String>,
    #[arg(long)]
    pub wall_density: Option<String>,
    #[arg(long)]
    pub marker_density: Option<String>,
    #[arg(long)]
    pub tasks: Option<String>,
    /// Neighborhood sizes for convergence, such as `10,250,1000`.
    #[arg(long)]
    pub ks: Option<String>,
    #[arg(long)]
    pub inits: Option<String>,
    #[arg(long)]
    pub num_states: Option<String>,
    /// Evaluation cap of each climb.
    #[arg(long)]
    pub budget: Option<String>,
    /// Number of equal steps in the target grid over [0, 1].
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub crashable: Option<String>,
    #[command(flatten)]
    pub grammar: GrammarArgs,
    #[arg(long)]
    pub out: Option<String>,
}

/// Parses arguments, runs the command and writes its outputs.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let outcome = execute(&cli)?;
    output::commit(&outcome.artifacts)?;
    if !outcome.report.is_empty() {
        eprint!("{}", outcome.report);
    }
    Ok(())
}
