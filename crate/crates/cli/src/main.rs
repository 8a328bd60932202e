//! `spot`: the extraction pipeline as headless subcommands.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use spot_core::classifier::TrainConfig;
use spot_core::filter::DEFAULT_TARGET_RECALL;
use spot_core::{Sector, SpotError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "spot", version, about = "Operating-segment extraction from earnings-report tables")]
pub struct Cli {
    /// key=value file of flag defaults for the subcommand; flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Args, Clone)]
pub struct StoreArgs {
    /// Filing and record store directory
    #[arg(long, env = "SPOT_STORE", default_value = "spot-store")]
    pub store: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct SplitArgs {
    /// Fraction of companies held out for testing
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Fraction of the remaining companies used for validation
    #[arg(long, default_value_t = 0.15)]
    pub valid_fraction: f64,
    /// Seed of the company split and of weight initialisation
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone)]
pub struct HyperArgs {
    #[arg(long, default_value_t = TrainConfig::default().embedding_dim)]
    pub embedding_dim: usize,
    #[arg(long, default_value_t = TrainConfig::default().hidden_units)]
    pub hidden_units: usize,
    #[arg(long, default_value_t = TrainConfig::default().seq_len)]
    pub seq_len: usize,
    #[arg(long, default_value_t = TrainConfig::default().dropout)]
    pub dropout: f64,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    pub max_epochs: usize,
    /// Epochs without validation F1 improvement before stopping
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    pub patience: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    /// Minimum count of a non-operating token to enter the vocabulary
    #[arg(long, default_value_t = TrainConfig::default().min_freq)]
    pub min_freq: u32,
    /// Decision threshold on the non-operating probability
    #[arg(long, default_value_t = TrainConfig::default().threshold)]
    pub threshold: f64,
    /// Keep pre-trained embeddings fixed
    #[arg(long)]
    pub freeze_embeddings: bool,
}

impl HyperArgs {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            embedding_dim: self.embedding_dim,
            hidden_units: self.hidden_units,
            seq_len: self.seq_len,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            min_freq: self.min_freq,
            threshold: self.threshold,
            freeze_embeddings: self.freeze_embeddings,
            seed,
        }
    }
}

fn parse_sector(s: &str) -> Result<Sector, String> {
    s.parse::<Sector>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Poll a feed file or directory and store new filings
    Ingest {
        #[command(flatten)]
        store: StoreArgs,
        /// Feed XML file or directory of COMPANY_FORM_DATE.html files
        #[arg(long)]
        feed: PathBuf,
        /// Sector for entries that do not name one
        #[arg(long, value_parser = parse_sector)]
        sector: Option<Sector>,
        /// Earnings keyword list, one term per line
        #[arg(long)]
        keywords: Option<PathBuf>,
    },
    /// Generate the synthetic labeled corpus into an empty directory
    GenCorpus {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Companies in every sector; the default shape has 149 in total
        #[arg(long)]
        companies_per_sector: Option<usize>,
        #[arg(long, default_value_t = 2)]
        filings_per_company: usize,
        #[arg(long, default_value_t = 6)]
        tables_per_filing: usize,
    },
    /// Build the company TF-IDF matrix from the stored earnings filings
    BuildTfidf {
        #[command(flatten)]
        store: StoreArgs,
        /// Output matrix file [default: <store>/tfidf.json]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose the boilerplate threshold on the training companies
    TuneDelta {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        tfidf: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TARGET_RECALL)]
        target_recall: f64,
        #[command(flatten)]
        split: SplitArgs,
        /// Output file [default: <store>/delta.json]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the header classifier on the training companies
    Train {
        #[arg(long)]
        labels: PathBuf,
        /// Checkpoint path; history and split files are written beside it
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
        /// Word-vector text file, one `token v1 .. vN` per line
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Score the classifier and the baselines on the held-out companies
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Evaluate on every label instead of the held-out companies
        #[arg(long)]
        all: bool,
        /// Skip the TF-IDF, naive Bayes and logistic regression baselines
        #[arg(long)]
        no_baselines: bool,
        /// Report directory
        #[arg(long, default_value = "eval")]
        out: PathBuf,
    },
    /// Extract segment records from stored filings
    Extract {
        #[command(flatten)]
        store: StoreArgs,
        /// Filing id; repeatable
        #[arg(long = "filing")]
        filings: Vec<String>,
        /// Every stored earnings filing
        #[arg(long, conflicts_with = "filings")]
        all: bool,
        #[arg(long)]
        model: PathBuf,
        /// TF-IDF matrix [default: <store>/tfidf.json]
        #[arg(long)]
        tfidf: Option<PathBuf>,
        /// Threshold value, or a file written by tune-delta [default: <store>/delta.json]
        #[arg(long)]
        delta: Option<String>,
        /// `company,fiscal_year_end_month` lines
        #[arg(long)]
        calendars: Option<PathBuf>,
        /// Also write the extracted records as JSON here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the review API
    Serve {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Export records as CSV
    Export {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        company: Option<String>,
        /// Period such as "Q3 2020"
        #[arg(long)]
        period: Option<String>,
        /// Header path or its last segment
        #[arg(long)]
        segment: Option<String>,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// 1 for errors in what the user supplied, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<CliError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<SpotError>() {
            return match e {
                SpotError::Validation(_)
                | SpotError::Format(_)
                | SpotError::NotFound { .. }
                | SpotError::Conflict { .. }
                | SpotError::UnknownCompany(_)
                | SpotError::EmptyInput(_)
                | SpotError::Shape(_)
                | SpotError::FeedParse { .. }
                | SpotError::Json(_)
                | SpotError::Csv(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn command() -> clap::Command {
    Cli::command().mut_subcommands(|s| s.args_override_self(true))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match config::expand(argv, &command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match command().try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
