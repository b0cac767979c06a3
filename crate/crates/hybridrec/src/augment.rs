//! LLM-driven data augmentation for the conventional models, plus
//! instruction-dataset construction and export.
//!
//! Three pipelines mirror the three task families: preference pairs for the
//! ranking model, sequence insertions for the sequential model, and
//! elicited attributes for the rating model. All pipelines are best-effort:
//! unparseable completions are skipped and counted, never fatal. Under a
//! fixed seed and the mock client every pipeline is fully deterministic.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Catalog, Corpus, ItemId, SplitCorpus, UserId};
use crate::llmlink::{
    build_prompt, format_rating, parse_attributes, parse_pair_preference, parse_ranked_list,
    LlmError, Prompt, PromptContext, PromptTask, TextCompletion, TitledEntry,
};

/// Own-history entries shown in augmentation prompts.
const HISTORY_LIMIT: usize = 10;
/// Candidate list size cap for listwise instruction records.
const LISTWISE_CANDIDATES: usize = 10;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("no user has enough train interactions to sample from")]
    InsufficientUsers,
    #[error("instruction records cannot be built for task {0}")]
    UnsupportedTask(PromptTask),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where a training triple came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleOrigin {
    Observed,
    LlmAugmented,
}

/// A (user, preferred, dispreferred) pair-ranking judgment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BprTriple {
    pub user: UserId,
    pub positive: ItemId,
    pub negative: ItemId,
    pub origin: TripleOrigin,
}

impl BprTriple {
    pub fn as_tuple(&self) -> (UserId, ItemId, ItemId) {
        (self.user, self.positive, self.negative)
    }
}

/// A user sequence with one predicted item spliced in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSequence {
    pub user: UserId,
    pub items: Vec<ItemId>,
    pub inserted_at: Option<usize>,
}

/// One supervised example for instruction tuning. Only `instruction`,
/// `input`, and `output` are exported; `task` and `user` stay in memory for
/// accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub task: PromptTask,
    pub user: UserId,
    pub instruction: String,
    pub input: String,
    pub output: String,
}

/// Best-effort accounting for one augmentation run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SkipReport {
    pub attempted: usize,
    pub emitted: usize,
    pub skipped_unparseable: usize,
}

fn prompt_history(corpus: &Corpus, user: UserId, rated: bool) -> Vec<TitledEntry> {
    let seq = corpus.user_interactions(user);
    let start = seq.len().saturating_sub(HISTORY_LIMIT);
    seq[start..]
        .iter()
        .map(|it| TitledEntry {
            title: corpus.item_title(it.item),
            rating: if rated { it.rating } else { None },
        })
        .collect()
}

/// Items the user has never interacted with, in ascending id order.
fn uninteracted(corpus: &Corpus, user: UserId) -> Vec<ItemId> {
    let seen: BTreeSet<ItemId> = corpus
        .user_interactions(user)
        .iter()
        .map(|it| it.item)
        .collect();
    corpus.items().filter(|i| !seen.contains(i)).collect()
}

/// Sample preference pairs among un-interacted items for every user, ask
/// the client to rank each pair, and emit a triple per parseable answer.
/// Unparseable responses are skipped and counted; transport failures (the
/// client's own retry budget already spent) abort.
pub fn augment_direct(
    train: &Corpus,
    client: &dyn TextCompletion,
    pairs_per_user: usize,
    seed: u64,
) -> Result<(Vec<BprTriple>, SkipReport), AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::new();
    let mut report = SkipReport::default();
    for user in train.users() {
        if train.user_interactions(user).is_empty() {
            continue;
        }
        let pool = uninteracted(train, user);
        if pool.len() < 2 {
            continue;
        }
        let history = prompt_history(train, user, false);
        for _ in 0..pairs_per_user {
            let first = pool[rng.gen_range(0..pool.len())];
            let second = loop {
                let cand = pool[rng.gen_range(0..pool.len())];
                if cand != first {
                    break cand;
                }
            };
            let titles = [train.item_title(first), train.item_title(second)];
            let ctx = PromptContext::for_task(PromptTask::PairRank)
                .with_history(history.clone())
                .with_candidates(titles.to_vec());
            let prompt = Prompt::render(PromptTask::PairRank, &ctx, Some(user), &[first, second])?;
            report.attempted += 1;
            let response = client.complete(&prompt)?;
            match parse_pair_preference(
                &response.text,
                (first, titles[0].as_str()),
                (second, titles[1].as_str()),
            ) {
                Ok((positive, negative)) => {
                    triples.push(BprTriple {
                        user,
                        positive,
                        negative,
                        origin: TripleOrigin::LlmAugmented,
                    });
                    report.emitted += 1;
                }
                Err(_) => report.skipped_unparseable += 1,
            }
        }
    }
    Ok((triples, report))
}

/// For every user with a non-empty history, sample `candidates_per_user`
/// un-interacted items, ask the client to pick the next item, and insert it
/// at a seeded uniform position in `[0, len]`.
pub fn augment_sequential(
    train: &Corpus,
    client: &dyn TextCompletion,
    candidates_per_user: usize,
    seed: u64,
) -> Result<(Vec<AugmentedSequence>, SkipReport), AugmentError> {
    assert!(candidates_per_user >= 1, "candidates_per_user must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences = Vec::new();
    let mut report = SkipReport::default();
    for user in train.users() {
        let seq: Vec<ItemId> = train
            .user_interactions(user)
            .iter()
            .map(|it| it.item)
            .collect();
        if seq.is_empty() {
            continue;
        }
        let mut pool = uninteracted(train, user);
        if pool.is_empty() {
            continue;
        }
        let mut candidates = Vec::new();
        for _ in 0..candidates_per_user.min(pool.len()) {
            let idx = rng.gen_range(0..pool.len());
            candidates.push(pool.swap_remove(idx));
        }
        let titles: Vec<String> = candidates.iter().map(|i| train.item_title(*i)).collect();
        let titled: Vec<(ItemId, String)> = candidates
            .iter()
            .copied()
            .zip(titles.iter().cloned())
            .collect();
        let ctx = PromptContext::for_task(PromptTask::NextItemPick)
            .with_history(prompt_history(train, user, false))
            .with_candidates(titles);
        let prompt = Prompt::render(PromptTask::NextItemPick, &ctx, Some(user), &candidates)?;
        report.attempted += 1;
        let response = client.complete(&prompt)?;
        let predicted = match parse_ranked_list(&response.text, &titled) {
            Ok(order) => order[0],
            Err(_) => {
                report.skipped_unparseable += 1;
                continue;
            }
        };
        let position = rng.gen_range(0..=seq.len());
        let mut items = seq.clone();
        items.insert(position, predicted);
        sequences.push(AugmentedSequence {
            user,
            items,
            inserted_at: Some(position),
        });
        report.emitted += 1;
    }
    Ok((sequences, report))
}

/// Ask the client for the target attributes of every cataloged item and
/// merge the parsed answers into the attribute maps without overwriting
/// existing keys. Returns the enriched catalog.
pub fn augment_attributes(
    corpus: &Corpus,
    client: &dyn TextCompletion,
    targets: &[String],
) -> Result<(Catalog, SkipReport), AugmentError> {
    assert!(!targets.is_empty(), "attribute targets must be non-empty");
    let mut catalog = corpus.catalog().clone();
    let mut report = SkipReport::default();
    for item in corpus.items() {
        let title = corpus.item_title(item);
        let ctx = PromptContext::for_task(PromptTask::AttributeElicit).with_candidates(vec![title]);
        let prompt = Prompt::render(PromptTask::AttributeElicit, &ctx, None, &[item])?
            .with_expected_attributes(targets.to_vec());
        report.attempted += 1;
        let response = client.complete(&prompt)?;
        match parse_attributes(&response.text, targets) {
            Ok(parsed) => {
                let attrs = &mut catalog.item_attributes[item.idx()];
                for (key, value) in parsed {
                    attrs.entry(key).or_insert(value);
                }
                report.emitted += 1;
            }
            Err(_) => report.skipped_unparseable += 1,
        }
    }
    Ok((catalog, report))
}

/// The attribute names elicited for each stock dataset.
pub fn default_attribute_targets(format: crate::corpus::DatasetFormat) -> Vec<String> {
    use crate::corpus::DatasetFormat;
    match format {
        DatasetFormat::MovieLens100K | DatasetFormat::MovieLens1M => {
            vec!["Movie Director".to_string(), "Movie Star".to_string()]
        }
        DatasetFormat::BookCrossing => {
            vec!["Book Genres".to_string(), "Page Length".to_string()]
        }
        DatasetFormat::GenericCsv => vec!["Description".to_string()],
    }
}

/// Build supervised instruction records from the training split: `per_task`
/// seeded samples per requested task, over users with at least three train
/// interactions, ground-truth outputs rendered from the corpus itself.
/// Records with identical `(instruction, input)` deduplicate to the first
/// occurrence.
pub fn build_instruction_dataset(
    split: &SplitCorpus,
    tasks: &[PromptTask],
    per_task: usize,
    seed: u64,
) -> Result<Vec<InstructionRecord>, AugmentError> {
    let train = &split.train;
    let eligible: Vec<UserId> = train
        .users()
        .filter(|u| train.user_interactions(*u).len() >= 3)
        .collect();
    if eligible.is_empty() {
        return Err(AugmentError::InsufficientUsers);
    }
    for task in tasks {
        if *task == PromptTask::AttributeElicit {
            return Err(AugmentError::UnsupportedTask(*task));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for &task in tasks {
        for _ in 0..per_task {
            let user = eligible[rng.gen_range(0..eligible.len())];
            if let Some(record) = sample_record(train, task, user, &mut rng) {
                records.push(record);
            }
        }
    }

    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    records.retain(|r| seen.insert((r.instruction.clone(), r.input.clone())));
    Ok(records)
}

fn sample_record(
    train: &Corpus,
    task: PromptTask,
    user: UserId,
    rng: &mut ChaCha8Rng,
) -> Option<InstructionRecord> {
    let seq = train.user_interactions(user);
    match task {
        PromptTask::ListwiseRank => {
            let n_candidates = LISTWISE_CANDIDATES.min(seq.len() - 1).max(2);
            let mut indices: Vec<usize> = (0..seq.len()).collect();
            let mut picked = Vec::new();
            for _ in 0..n_candidates {
                let at = rng.gen_range(0..indices.len());
                picked.push(indices.swap_remove(at));
            }
            let candidates: Vec<&crate::corpus::Interaction> =
                picked.iter().map(|&i| &seq[i]).collect();
            let history: Vec<TitledEntry> = indices
                .iter()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .map(|i| TitledEntry::new(train.item_title(seq[i].item)))
                .collect();
            let titles: Vec<String> = candidates
                .iter()
                .map(|it| train.item_title(it.item))
                .collect();
            // Ground truth: candidates ordered by held-in rating,
            // descending, ties keeping the prompt order.
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            order.sort_by(|&a, &b| {
                let ra = candidates[a].rating.unwrap_or(f64::NEG_INFINITY);
                let rb = candidates[b].rating.unwrap_or(f64::NEG_INFINITY);
                rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
            });
            let output: Vec<String> = order.iter().map(|&i| titles[i].clone()).collect();
            let ctx = PromptContext::for_task(task)
                .with_history(truncate_history(history))
                .with_candidates(titles);
            Some(record_from_ctx(task, user, &ctx, output.join("; ")))
        }
        PromptTask::RatingPredict | PromptTask::PointwiseRate => {
            let rated: Vec<&crate::corpus::Interaction> =
                seq.iter().filter(|it| it.rating.is_some()).collect();
            if rated.len() < 2 {
                return None;
            }
            let target = rated[rng.gen_range(0..rated.len())];
            let history: Vec<TitledEntry> = seq
                .iter()
                .filter(|it| it.item != target.item)
                .filter_map(|it| {
                    it.rating
                        .map(|r| TitledEntry::rated(train.item_title(it.item), r))
                })
                .collect();
            if history.is_empty() {
                return None;
            }
            let ctx = PromptContext::for_task(task)
                .with_history(truncate_history(history))
                .with_candidates(vec![train.item_title(target.item)]);
            Some(record_from_ctx(
                task,
                user,
                &ctx,
                format_rating(target.rating.expect("rated")),
            ))
        }
        PromptTask::PairRank => {
            let rated: Vec<&crate::corpus::Interaction> =
                seq.iter().filter(|it| it.rating.is_some()).collect();
            if rated.len() < 3 {
                return None;
            }
            let a = rng.gen_range(0..rated.len());
            let b = loop {
                let cand = rng.gen_range(0..rated.len());
                if cand != a {
                    break cand;
                }
            };
            let (first, second) = (rated[a], rated[b]);
            let history: Vec<TitledEntry> = seq
                .iter()
                .filter(|it| it.item != first.item && it.item != second.item)
                .map(|it| TitledEntry::new(train.item_title(it.item)))
                .collect();
            if history.is_empty() {
                return None;
            }
            let titles = [train.item_title(first.item), train.item_title(second.item)];
            let preferred_first = first.rating >= second.rating;
            let output = if preferred_first {
                format!("{}; {}", titles[0], titles[1])
            } else {
                format!("{}; {}", titles[1], titles[0])
            };
            let ctx = PromptContext::for_task(task)
                .with_history(truncate_history(history))
                .with_candidates(titles.to_vec());
            Some(record_from_ctx(task, user, &ctx, output))
        }
        PromptTask::NextItemPick => {
            // Candidates come from the user's own sequence; the ground
            // truth is the latest of them.
            let n_candidates = LISTWISE_CANDIDATES.min(seq.len() - 1).max(2);
            let start = rng.gen_range(0..=seq.len() - n_candidates);
            let candidates = &seq[start..start + n_candidates];
            let latest = candidates
                .iter()
                .enumerate()
                .max_by_key(|(idx, it)| (it.timestamp, *idx))
                .map(|(_, it)| it)
                .expect("non-empty");
            let history: Vec<TitledEntry> = seq[..start]
                .iter()
                .map(|it| TitledEntry::new(train.item_title(it.item)))
                .collect();
            if history.is_empty() {
                return None;
            }
            let titles: Vec<String> = candidates
                .iter()
                .map(|it| train.item_title(it.item))
                .collect();
            let ctx = PromptContext::for_task(task)
                .with_history(truncate_history(history))
                .with_candidates(titles);
            Some(record_from_ctx(
                task,
                user,
                &ctx,
                train.item_title(latest.item),
            ))
        }
        PromptTask::AttributeElicit => None,
    }
}

fn truncate_history(history: Vec<TitledEntry>) -> Vec<TitledEntry> {
    let start = history.len().saturating_sub(HISTORY_LIMIT);
    history[start..].to_vec()
}

fn record_from_ctx(
    task: PromptTask,
    user: UserId,
    ctx: &PromptContext,
    output: String,
) -> InstructionRecord {
    let full = build_prompt(task, ctx).expect("context is complete by construction");
    let instruction_line = format!("Instruction: {}", ctx.instruction);
    let input = full
        .strip_prefix(&instruction_line)
        .map(|rest| rest.trim_start_matches('\n'))
        .unwrap_or(&full)
        .strip_suffix("Output:")
        .map(|s| s.trim_end_matches('\n').to_string())
        .expect("prompt ends with the output cue");
    InstructionRecord {
        task,
        user,
        instruction: ctx.instruction.clone(),
        input,
        output,
    }
}

#[derive(Serialize, Deserialize)]
struct ExportedRecord<'a> {
    instruction: &'a str,
    input: &'a str,
    output: &'a str,
}

/// Write records as JSON lines, one `{"instruction","input","output"}`
/// object per line, UTF-8, newline terminated.
pub fn export_instructions(records: &[InstructionRecord], path: &Path) -> Result<(), AugmentError> {
    let mut file = fs::File::create(path)?;
    for record in records {
        let line = serde_json::to_string(&ExportedRecord {
            instruction: &record.instruction,
            input: &record.input,
            output: &record.output,
        })
        .expect("record serializes");
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    Ok(())
}
