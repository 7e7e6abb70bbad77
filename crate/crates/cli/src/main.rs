//! `amlnet`: batch pipeline from a factoring ledger to risk networks,
//! client risk scores and tacit-link cluster alerts.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amlnet_core::network::Collapse;
use amlnet_core::scoring::ArcCombine;
use amlnet_core::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] amlnet_core::Error),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Numerical => 2,
                ErrorKind::Io => 3,
            },
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "amlnet", version, about = "Risk networks and client risk profiles from factoring ledgers")]
struct Cli {
    /// Configuration file (TOML). Command-line flags override its keys.
    #[arg(long, global = true, env = "AMLNET_CONFIG")]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct RunArg {
    /// Run directory; every output of the command is written inside it.
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic ledger with injected laundering patterns.
    Generate(GenerateArgs),
    /// Validate a ledger and labels, apply the recording threshold.
    Ingest(IngestArgs),
    /// Build the risk networks and compute the per-client feature matrix.
    Analyze(AnalyzeArgs),
    /// Fit logistic risk models on the labeled clients.
    Fit(FitArgs),
    /// Score and rank clients with a fitted or bundled model.
    Score(ScoreArgs),
    /// Tacit-link components and cluster alerts.
    Alerts(AlertsArgs),
    /// Export networks and the bundled reference tables.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub run: RunArg,
    /// Scenario TOML; the reference-scale preset when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Risk tables TOML used to pick sectors, regions and countries.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub run: RunArg,
    /// Ledger CSV. Defaults to the ledger produced by `generate` in this run.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Label CSV (`party_id,high_risk`).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Risk tables TOML; the bundled tables when omitted.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Smurfing aggregation window in days.
    #[arg(long)]
    pub window: Option<u32>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub run: RunArg,
    /// High-risk arc threshold on the 1-3 scale for all networks.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_parser = parse_collapse)]
    pub collapse: Option<Collapse>,
    #[arg(long, value_parser = parse_arc_combine)]
    pub arc_combine: Option<ArcCombine>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub run: RunArg,
    /// Comma-separated feature columns. Without it the four reference
    /// predictor sets are fitted.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    /// Name for a custom model.
    #[arg(long, default_value = "custom")]
    pub name: String,
    /// Fit on z-scored predictors.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub run: RunArg,
    /// `paper:model1`..`paper:model4`, a model path inside the run
    /// (e.g. `models/model3.json`) or any model JSON file.
    #[arg(long)]
    pub model: String,
    /// Feature CSV; the run's `features.csv` when omitted.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AlertsArgs {
    #[command(flatten)]
    pub run: RunArg,
    /// Extra flagged party ids, one per line.
    #[arg(long)]
    pub flags: Option<PathBuf>,
    /// Do not treat High Risk labels as flags.
    #[arg(long)]
    pub ignore_labels: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Graphml,
    Dot,
    Both,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub run: RunArg,
    #[arg(long, value_enum, default_value = "both")]
    pub format: ExportFormat,
    /// Also write the bundled risk tables and reference models for editing.
    #[arg(long)]
    pub tables: bool,
}

fn parse_collapse(s: &str) -> Result<Collapse, String> {
    s.parse()
}

fn parse_arc_combine(s: &str) -> Result<ArcCombine, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let config = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        },
        None => FileConfig::default(),
    };

    let result = match cli.command {
        Command::Generate(a) => commands::generate(&config, a),
        Command::Ingest(a) => commands::ingest(&config, a),
        Command::Analyze(a) => commands::analyze(&config, a),
        Command::Fit(a) => commands::fit(&config, a),
        Command::Score(a) => commands::score(&config, a),
        Command::Alerts(a) => commands::alerts(&config, a),
        Command::Export(a) => commands::export(&config, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
