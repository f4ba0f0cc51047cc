use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod report;

use config::ConfigFile;
use error::{CliError, EXIT_USAGE};

/// Network-disruption detection, seeded discovery and sentiment tools.
#[derive(Debug, Parser)]
#[command(name = "websift", version)]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find disruption events in a BGP update log and rank their likely causes.
    Detect(DetectArgs),
    /// Rank candidate documents by similarity to a seed set.
    Discover(DiscoverArgs),
    /// Fit word and document polarities on a bipartite document-word graph.
    Sentiment(SentimentArgs),
    /// Train naive Bayes on labeled documents and label a test set.
    ClassifyFraming(FramingArgs),
    /// Label sites by how their inlinkers link into two reference sets.
    Ideology(IdeologyArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Update log: `timestamp<TAB>prefix<TAB>origin_as<TAB>vp`.
    #[arg(long)]
    pub updates: PathBuf,
    /// Undirected AS adjacency list: `as<TAB>as`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Vantage-point homes: `vp<TAB>as`.
    #[arg(long)]
    pub vp_home: PathBuf,
    /// Keep only the vantage points listed in this file.
    #[arg(long)]
    pub vp_filter: Option<PathBuf>,
    /// Also write the assembled update tensor.
    #[arg(long)]
    pub tensor_out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Window start in epoch seconds [default: earliest update, rounded down to a multiple of dt].
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<f64>,
    /// Bin width in seconds [default: 30].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of bins [default: 2880].
    #[arg(long)]
    pub bins: Option<usize>,
    /// CP rank.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Number of heaviest components reported as events [default: 1].
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub theta_as: Option<f64>,
    #[arg(long)]
    pub theta_time: Option<f64>,
    #[arg(long)]
    pub theta_vp: Option<f64>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    /// Seed documents.
    #[arg(long)]
    pub seeds: PathBuf,
    /// Candidate documents.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Minimum score to report [default: 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub max_df_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SentimentMode {
    Semi,
    Transfer,
    /// Score documents with previously exported word weights.
    Classify,
}

#[derive(Debug, Args)]
pub struct SentimentArgs {
    /// Documents: `id<TAB>text` or `id<TAB>label<TAB>domain<TAB>text`.
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, value_enum)]
    pub mode: SentimentMode,
    /// Polarity lexicon: `word<TAB>+1|-1`.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Word weights for `--mode classify`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Export fitted word weights here.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub beta3: Option<f64>,
    #[arg(long)]
    pub k_s: Option<f64>,
    #[arg(long)]
    pub k_t: Option<f64>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub cg_max_iter: Option<usize>,
    /// Scale each document row to unit length before building the graph.
    #[arg(long)]
    pub normalize_rows: Option<bool>,
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub max_df_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FramingArgs {
    /// Labeled training documents (`framing` / `non-framing` or `+1` / `-1`).
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub min_df: Option<usize>,
    #[arg(long)]
    pub max_df_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IdeologyArgs {
    /// Directed hyperlinks: `from<TAB>to`.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub set_a: PathBuf,
    #[arg(long)]
    pub set_b: PathBuf,
    /// Site to label; repeatable.
    #[arg(long)]
    pub target: Vec<String>,
    /// File of sites to label, one per line.
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    let outcome = match &cli.command {
        Command::Detect(args) => commands::detect::run(args, &file)?,
        Command::Discover(args) => commands::discover::run(args, &file)?,
        Command::Sentiment(args) => commands::sentiment::run(args, &file)?,
        Command::ClassifyFraming(args) => commands::framing::run(args, &file)?,
        Command::Ideology(args) => commands::ideology::run(args, &file)?,
    };
    let text = outcome.report.render();
    match &cli.out {
        Some(path) => error::write_output(path, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::data(format!("cannot write report: {e}")))?;
        }
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(err)) | Err(err) => {
            eprintln!("websift: {err}");
            ExitCode::from(err.code as u8)
        }
    }
}
