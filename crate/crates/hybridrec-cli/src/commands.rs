//! Command implementations. Each command merges its flags over the file
//! config, runs the library pipeline, writes its artifacts under `--out`,
//! and echoes the effective config with a version stamp.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use hybridrec::aggregate::AggregationPolicy;
use hybridrec::augment::{
    augment_attributes, augment_direct, augment_sequential, build_instruction_dataset,
    default_attribute_targets, export_instructions, AugmentError,
};
use hybridrec::corpus::{ingest, Corpus, CorpusError, DatasetFormat, SplitCorpus};
use hybridrec::evalkit::{evaluate_rating, evaluate_topk, EvalError, MetricReport};
use hybridrec::llmlink::{
    LLMClientConfig, LlmError, MockOracle, PromptTask, RemoteClient, TextCompletion,
};
use hybridrec::recmodels::{
    load_mf, load_rating, save_markov, save_mf, save_rating, train_markov_seq, train_mf_bpr,
    train_rating_mf, ModelError,
};

use crate::args;
use crate::config::{
    override_opt, override_with, parse_comma_list, parse_cutoffs, write_run_config, LlmSection,
    RunConfig,
};

/// A bad invocation rather than a bad dataset: exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

/// Exit code policy: 2 usage, 3 data, 4 transport.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    fn llm_code(err: &LlmError) -> u8 {
        match err {
            LlmError::Timeout { .. }
            | LlmError::RateLimited { .. }
            | LlmError::TransportError { .. } => 4,
            _ => 3,
        }
    }
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<LlmError>() {
            return llm_code(e);
        }
        if let Some(e) = cause.downcast_ref::<AugmentError>() {
            return match e {
                AugmentError::Llm(inner) => llm_code(inner),
                _ => 3,
            };
        }
        if cause.downcast_ref::<CorpusError>().is_some()
            || cause.downcast_ref::<ModelError>().is_some()
            || cause.downcast_ref::<EvalError>().is_some()
        {
            return 3;
        }
    }
    3
}

fn ensure_out(out: &Option<PathBuf>) -> Result<PathBuf> {
    let out = out
        .clone()
        .ok_or_else(|| usage("--out DIR is required (flag or config key 'out')"))?;
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).expect("row serializes"));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read corpus {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("{} is not an ingested corpus file", path.display()))
}

fn parse_format(format: &Option<String>) -> Result<DatasetFormat> {
    let name = format
        .as_deref()
        .ok_or_else(|| usage("--format is required (ml100k, ml1m, bookcrossing, csv)"))?;
    name.parse::<DatasetFormat>()
        .map_err(|e| usage(e.to_string()))
}

fn build_client(
    section: &LlmSection,
    split: Option<&SplitCorpus>,
) -> Result<Box<dyn TextCompletion>> {
    if section.mock {
        let split = split
            .ok_or_else(|| usage("--mock needs an interaction corpus to build the oracle from"))?;
        return Ok(Box::new(MockOracle::from_split(split)));
    }
    let config = LLMClientConfig {
        endpoint_url: section.endpoint_url.clone().unwrap_or_default(),
        model: section.model.clone(),
        timeout_ms: section.timeout_ms,
        max_in_flight: section.max_in_flight,
        max_retries: section.max_retries,
        max_tokens: section.max_tokens,
        ..LLMClientConfig::default()
    };
    let client = RemoteClient::from_env(config)?;
    if client.config().endpoint_url.is_empty() {
        return Err(usage(
            "no LLM endpoint: pass --endpoint, set config llm.endpoint_url, \
             set HYBRIDREC_LLM_URL, or use --mock",
        ));
    }
    Ok(Box::new(client))
}

fn merge_client_args(section: &mut LlmSection, flags: &args::ClientArgs) {
    if flags.mock {
        section.mock = true;
    }
    override_opt(&mut section.endpoint_url, &flags.endpoint);
    override_with(&mut section.model, &flags.model_name);
    override_with(&mut section.timeout_ms, &flags.timeout_ms);
    override_with(&mut section.max_retries, &flags.max_retries);
    override_with(&mut section.max_in_flight, &flags.max_in_flight);
}

fn parse_policy(config: &RunConfig) -> Result<AggregationPolicy> {
    AggregationPolicy::new(config.policy.alpha1, config.policy.alpha2, config.policy.c)
        .map_err(|e| usage(e.to_string()))
}

pub fn cmd_ingest(mut config: RunConfig, flags: &args::IngestArgs) -> Result<()> {
    override_opt(&mut config.dataset.path, &flags.path);
    override_opt(&mut config.dataset.format, &flags.format);
    override_opt(&mut config.dataset.k_core, &flags.k_core);
    override_opt(&mut config.out, &flags.out);

    let path = config
        .dataset
        .path
        .clone()
        .ok_or_else(|| usage("--path is required"))?;
    let format = parse_format(&config.dataset.format)?;
    let out = ensure_out(&config.out)?;

    let mut corpus = ingest(&path, format)?;
    if let Some(k) = config.dataset.k_core {
        corpus = corpus.apply_k_core(k)?;
    }
    let stats = corpus.stats()?;

    write_json(&out.join("corpus.json"), &corpus)?;
    write_json(&out.join("stats.json"), &stats)?;
    write_run_config(&out, "ingest", &config)?;
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
    Ok(())
}

pub fn cmd_stats(mut config: RunConfig, flags: &args::StatsArgs) -> Result<()> {
    override_opt(&mut config.dataset.corpus, &flags.corpus);
    override_opt(&mut config.dataset.path, &flags.path);
    override_opt(&mut config.dataset.format, &flags.format);
    override_opt(&mut config.out, &flags.out);

    let corpus = match (&config.dataset.corpus, &config.dataset.path) {
        (Some(corpus_file), _) => load_corpus(corpus_file)?,
        (None, Some(path)) => ingest(path, parse_format(&config.dataset.format)?)?,
        (None, None) => return Err(usage("give --corpus FILE or --path DIR with --format")),
    };
    let stats = corpus.stats()?;
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
    if config.out.is_some() {
        let out = ensure_out(&config.out)?;
        write_json(&out.join("stats.json"), &stats)?;
        write_run_config(&out, "stats", &config)?;
    }
    Ok(())
}

pub fn cmd_train(mut config: RunConfig, flags: &args::TrainArgs) -> Result<()> {
    override_opt(&mut config.train.model, &flags.model);
    override_opt(&mut config.dataset.corpus, &flags.corpus);
    override_with(&mut config.train.dimension, &flags.dimension);
    override_with(&mut config.train.learning_rate, &flags.learning_rate);
    override_with(&mut config.train.l2_regularization, &flags.l2);
    override_with(&mut config.train.epochs, &flags.epochs);
    override_with(&mut config.train.negatives_per_positive, &flags.negatives);
    override_with(&mut config.train.rng_seed, &flags.seed);
    override_opt(&mut config.out, &flags.out);

    let corpus_file = config
        .dataset
        .corpus
        .clone()
        .ok_or_else(|| usage("--corpus FILE is required"))?;
    let model_kind = config
        .train
        .model
        .clone()
        .ok_or_else(|| usage("--model is required (mf-bpr, rating-mf, markov)"))?;
    let out = ensure_out(&config.out)?;

    let corpus = load_corpus(&corpus_file)?;
    let split = corpus.leave_one_out_split()?;
    let train_config = config.train.to_train_config();
    let model_path = out.join("model.json");
    match model_kind.replace('-', "_").as_str() {
        "mf_bpr" => {
            let model = train_mf_bpr(&split.train, &train_config)?;
            save_mf(&model, &model_path)?;
        }
        "rating_mf" => {
            let model = train_rating_mf(&split.train, &train_config)?;
            save_rating(&model, &model_path)?;
        }
        "markov" => {
            let model = train_markov_seq(&split.train);
            save_markov(&model, &model_path)?;
        }
        other => return Err(usage(format!("unknown model kind {other:?}"))),
    }
    write_run_config(&out, "train", &config)?;
    println!("trained {model_kind} -> {}", model_path.display());
    Ok(())
}

pub fn cmd_augment(mut config: RunConfig, flags: &args::AugmentArgs) -> Result<()> {
    override_opt(&mut config.augment.kind, &flags.kind);
    override_opt(&mut config.dataset.corpus, &flags.corpus);
    merge_client_args(&mut config.llm, &flags.client);
    override_with(&mut config.augment.pairs_per_user, &flags.pairs_per_user);
    override_with(
        &mut config.augment.candidates_per_user,
        &flags.candidates_per_user,
    );
    if let Some(t) = &flags.targets {
        config.augment.targets = Some(parse_comma_list(t));
    }
    override_with(&mut config.augment.seed, &flags.seed);
    override_opt(&mut config.out, &flags.out);

    let corpus_file = config
        .dataset
        .corpus
        .clone()
        .ok_or_else(|| usage("--corpus FILE is required"))?;
    let kind = config
        .augment
        .kind
        .clone()
        .ok_or_else(|| usage("--kind is required (direct, sequential, attributes)"))?;
    let out = ensure_out(&config.out)?;

    let corpus = load_corpus(&corpus_file)?;
    let split = corpus.leave_one_out_split()?;
    let client = build_client(&config.llm, Some(&split))?;

    match kind.as_str() {
        "direct" => {
            let (triples, report) = augment_direct(
                &split.train,
                client.as_ref(),
                config.augment.pairs_per_user,
                config.augment.seed,
            )?;
            write_jsonl(&out.join("triples.jsonl"), &triples)?;
            write_json(&out.join("skip_report.json"), &report)?;
            write_json(&out.join("corpus.json"), &corpus)?;
            println!(
                "direct augmentation: {} triples ({} skipped)",
                triples.len(),
                report.skipped_unparseable
            );
        }
        "sequential" => {
            let (sequences, report) = augment_sequential(
                &split.train,
                client.as_ref(),
                config.augment.candidates_per_user,
                config.augment.seed,
            )?;
            write_jsonl(&out.join("sequences.jsonl"), &sequences)?;
            write_json(&out.join("skip_report.json"), &report)?;
            write_json(&out.join("corpus.json"), &corpus)?;
            println!(
                "sequential augmentation: {} sequences ({} skipped)",
                sequences.len(),
                report.skipped_unparseable
            );
        }
        "attributes" => {
            let targets =
                match &config.augment.targets {
                    Some(t) if !t.is_empty() => t.clone(),
                    _ => {
                        let format = config
                            .dataset
                            .format
                            .as_ref()
                            .map(|f| f.parse::<DatasetFormat>())
                            .transpose()
                            .map_err(|e| usage(e.to_string()))?;
                        match format {
                            Some(f) => default_attribute_targets(f),
                            None => return Err(usage(
                                "--targets (or dataset.format for the stock defaults) is required",
                            )),
                        }
                    }
                };
            let (catalog, report) = augment_attributes(&corpus, client.as_ref(), &targets)?;
            let enriched = corpus.with_catalog(catalog);
            write_json(&out.join("corpus.json"), &enriched)?;
            write_json(&out.join("skip_report.json"), &report)?;
            println!(
                "attribute augmentation: {} items enriched ({} skipped)",
                report.emitted, report.skipped_unparseable
            );
        }
        other => return Err(usage(format!("unknown augmentation kind {other:?}"))),
    }
    write_run_config(&out, "augment", &config)?;
    Ok(())
}

fn parse_tasks(names: &[String]) -> Result<Vec<PromptTask>> {
    names
        .iter()
        .map(|name| match name.as_str() {
            "listwise" => Ok(PromptTask::ListwiseRank),
            "pointwise" => Ok(PromptTask::PointwiseRate),
            "rating" => Ok(PromptTask::RatingPredict),
            "pair" => Ok(PromptTask::PairRank),
            "next" => Ok(PromptTask::NextItemPick),
            other => Err(usage(format!(
                "unknown task {other:?} (listwise, pointwise, rating, pair, next)"
            ))),
        })
        .collect()
}

pub fn cmd_instructions(mut config: RunConfig, flags: &args::InstructionsArgs) -> Result<()> {
    override_opt(&mut config.dataset.corpus, &flags.corpus);
    if let Some(tasks) = &flags.tasks {
        config.instructions.tasks = parse_comma_list(tasks);
    }
    override_with(&mut config.instructions.per_task, &flags.per_task);
    override_with(&mut config.instructions.seed, &flags.seed);
    override_opt(&mut config.out, &flags.out);

    let corpus_file = config
        .dataset
        .corpus
        .clone()
        .ok_or_else(|| usage("--corpus FILE is required"))?;
    let out = ensure_out(&config.out)?;
    let tasks = parse_tasks(&config.instructions.tasks)?;

    let corpus = load_corpus(&corpus_file)?;
    let split = corpus.leave_one_out_split()?;
    let records = build_instruction_dataset(
        &split,
        &tasks,
        config.instructions.per_task,
        config.instructions.seed,
    )?;
    export_instructions(&records, &out.join("instructions.jsonl"))?;
    write_run_config(&out, "instructions", &config)?;
    println!("wrote {} instruction records", records.len());
    Ok(())
}

fn run_evaluation(
    task: &str,
    config: &RunConfig,
    split: &SplitCorpus,
    client: &dyn TextCompletion,
    policy: &AggregationPolicy,
) -> Result<MetricReport> {
    let opts = config.evaluate.to_eval_options();
    let model_path = config
        .evaluate
        .model_path
        .clone()
        .ok_or_else(|| usage("--model FILE is required"))?;
    let report = match task {
        "topk" => {
            let model = load_mf(&model_path)?;
            evaluate_topk(&model, client, policy, split, &opts)?
        }
        "rating" => {
            let model = load_rating(&model_path)?;
            evaluate_rating(&model, client, policy, split, &opts)?
        }
        other => return Err(usage(format!("unknown task {other:?} (topk, rating)"))),
    };
    Ok(report)
}

pub fn cmd_evaluate(mut config: RunConfig, flags: &args::EvaluateArgs) -> Result<()> {
    override_opt(&mut config.evaluate.task, &flags.task);
    override_opt(&mut config.dataset.corpus, &flags.corpus);
    override_opt(&mut config.evaluate.model_path, &flags.model);
    merge_client_args(&mut config.llm, &flags.client);
    override_with(&mut config.policy.alpha1, &flags.alpha1);
    override_with(&mut config.policy.alpha2, &flags.alpha2);
    override_with(&mut config.policy.c, &flags.c);
    override_with(&mut config.evaluate.k_prime, &flags.k_prime);
    if let Some(cutoffs) = &flags.cutoffs {
        config.evaluate.cutoffs = parse_cutoffs(cutoffs)?;
    }
    override_with(&mut config.evaluate.history_limit, &flags.history_limit);
    override_opt(&mut config.evaluate.alpha_override, &flags.alpha_override);
    override_opt(&mut config.out, &flags.out);

    let task = config
        .evaluate
        .task
        .clone()
        .ok_or_else(|| usage("--task is required (topk, rating)"))?;
    let corpus_file = config
        .dataset
        .corpus
        .clone()
        .ok_or_else(|| usage("--corpus FILE is required"))?;
    if let Some(a) = config.evaluate.alpha_override {
        if !(0.0..=1.0).contains(&a) {
            return Err(usage(format!(
                "--alpha-override must lie in [0, 1], got {a}"
            )));
        }
    }
    let out = ensure_out(&config.out)?;
    let policy = parse_policy(&config)?;

    let corpus = load_corpus(&corpus_file)?;
    let split = corpus.leave_one_out_split()?;
    let client = build_client(&config.llm, Some(&split))?;
    let report = run_evaluation(&task, &config, &split, client.as_ref(), &policy)?;

    write_json(&out.join("report.json"), &report)?;
    write_run_config(&out, "evaluate", &config)?;
    println!("{}", report.to_json());
    Ok(())
}

const ALPHA_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Serialize)]
struct BestCell {
    alpha1: f64,
    alpha2: f64,
    value: f64,
}

pub fn cmd_sweep(mut config: RunConfig, flags: &args::SweepArgs) -> Result<()> {
    override_opt(&mut config.evaluate.task, &flags.task);
    override_opt(&mut config.dataset.corpus, &flags.corpus);
    override_opt(&mut config.evaluate.model_path, &flags.model);
    merge_client_args(&mut config.llm, &flags.client);
    override_with(&mut config.policy.c, &flags.c);
    override_with(&mut config.evaluate.k_prime, &flags.k_prime);
    if let Some(cutoffs) = &flags.cutoffs {
        config.evaluate.cutoffs = parse_cutoffs(cutoffs)?;
    }
    override_with(&mut config.evaluate.history_limit, &flags.history_limit);
    override_opt(&mut config.out, &flags.out);

    let task = config
        .evaluate
        .task
        .clone()
        .ok_or_else(|| usage("--task is required (topk, rating)"))?;
    let corpus_file = config
        .dataset
        .corpus
        .clone()
        .ok_or_else(|| usage("--corpus FILE is required"))?;
    let out = ensure_out(&config.out)?;
    let reports_dir = out.join("reports");
    fs::create_dir_all(&reports_dir)?;

    let corpus = load_corpus(&corpus_file)?;
    let split = corpus.leave_one_out_split()?;
    let client = build_client(&config.llm, Some(&split))?;

    // Higher is better for ranking metrics, lower for error metrics.
    let mut best: std::collections::BTreeMap<String, BestCell> = Default::default();
    let mut improves = |key: &str, value: f64, a1: f64, a2: f64, higher_better: bool| {
        let slot = best.get(key);
        let better = match slot {
            None => true,
            Some(cell) => {
                if higher_better {
                    value > cell.value
                } else {
                    value < cell.value
                }
            }
        };
        if better {
            best.insert(
                key.to_string(),
                BestCell {
                    alpha1: a1,
                    alpha2: a2,
                    value,
                },
            );
        }
    };

    for a1 in ALPHA_GRID {
        for a2 in ALPHA_GRID {
            let mut cell_config = config.clone();
            cell_config.policy.alpha1 = a1;
            cell_config.policy.alpha2 = a2;
            let policy = parse_policy(&cell_config)?;
            let report = run_evaluation(&task, &cell_config, &split, client.as_ref(), &policy)?;
            write_json(
                &reports_dir.join(format!("report_a1_{a1}_a2_{a2}.json")),
                &report,
            )?;
            for (k, v) in &report.hr {
                improves(&format!("hr@{k}"), *v, a1, a2, true);
            }
            for (k, v) in &report.ndcg {
                improves(&format!("ndcg@{k}"), *v, a1, a2, true);
            }
            if let Some(v) = report.rmse {
                improves("rmse", v, a1, a2, false);
            }
            if let Some(v) = report.mae {
                improves("mae", v, a1, a2, false);
            }
        }
    }

    write_json(&out.join("best.json"), &best)?;
    write_run_config(&out, "sweep", &config)?;
    println!("{}", serde_json::to_string_pretty(&best).unwrap());
    Ok(())
}
