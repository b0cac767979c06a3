//! Command-line surface. Every flag overrides the matching key of the
//! optional JSON config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "hybridrec",
    version,
    about = "Hybrid recommendation pipelines: local models, LLM reranking, adaptive fusion"
)]
pub struct Cli {
    /// JSON config file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a raw dataset, optionally k-core filter it, and write the
    /// indexed corpus plus its stats.
    Ingest(IngestArgs),
    /// Print and write the stats of a corpus.
    Stats(StatsArgs),
    /// Train a conventional model on the leave-one-out training split.
    Train(TrainArgs),
    /// Run one of the LLM data-augmentation pipelines.
    Augment(AugmentArgs),
    /// Build and export an instruction-tuning dataset.
    Instructions(InstructionsArgs),
    /// Evaluate the fused pipeline on the test split.
    Evaluate(EvaluateArgs),
    /// Grid-sweep the fusion weights and report the best cell per metric.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Default)]
pub struct IngestArgs {
    /// Dataset directory (or file, for generic CSV).
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Dataset format: ml100k, ml1m, bookcrossing, csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Apply k-core filtering with this k after ingestion.
    #[arg(long)]
    pub k_core: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct StatsArgs {
    /// Previously ingested corpus file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Raw dataset path, used with --format when no corpus file is given.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Which model to train: mf-bpr, rating-mf, markov.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ClientArgs {
    /// Use the deterministic mock oracle instead of a remote endpoint.
    #[arg(long)]
    pub mock: bool,
    /// Completion endpoint URL (or HYBRIDREC_LLM_URL).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Remote model name.
    #[arg(long)]
    pub model_name: Option<String>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct AugmentArgs {
    /// Pipeline: direct, sequential, attributes.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub client: ClientArgs,
    #[arg(long)]
    pub pairs_per_user: Option<usize>,
    #[arg(long)]
    pub candidates_per_user: Option<usize>,
    /// Comma-separated attribute names to elicit.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct InstructionsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Comma-separated tasks: listwise, pointwise, rating.
    #[arg(long)]
    pub tasks: Option<String>,
    #[arg(long)]
    pub per_task: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct EvaluateArgs {
    /// Task family: topk or rating.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Trained model file (mf-bpr for topk, rating-mf for rating).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub client: ClientArgs,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub k_prime: Option<usize>,
    /// Comma-separated metric cutoffs, e.g. 3,5.
    #[arg(long)]
    pub cutoffs: Option<String>,
    #[arg(long)]
    pub history_limit: Option<usize>,
    /// Pin every user's blend weight to this value (bypasses the adaptive rule).
    #[arg(long)]
    pub alpha_override: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub client: ClientArgs,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub k_prime: Option<usize>,
    #[arg(long)]
    pub cutoffs: Option<String>,
    #[arg(long)]
    pub history_limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
