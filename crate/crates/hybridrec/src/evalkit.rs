//! Ranking and rating metrics, and the end-to-end evaluation harness that
//! wires conventional models, prompt augmentation, a completion client, and
//! the adaptive fusion together over a leave-one-out split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregate::{
    aggregate_rating, aggregate_rerank, AggregateError, AggregationPolicy, LongTailStats,
};
use crate::corpus::{Corpus, ItemId, SplitCorpus, UserId};
use crate::llmlink::{
    augment_with_model_prediction, augment_with_similar_user, format_rating, parse_ranked_list,
    parse_rating, Prompt, PromptContext, PromptTask, TextCompletion, TitledEntry,
};
use crate::recmodels::{
    most_similar_user, ItemScorer, ModelError, RankedList, RatingModel, UserEmbeddings,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no pairs to evaluate")]
    EmptyInput,
    #[error("evaluation needs k' >= the largest cutoff ({cutoff} > {k_prime})")]
    CutoffBeyondCandidates { cutoff: usize, k_prime: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
}

/// Hit ratio at `k`: 1 when the target sits within the first `k` ranks.
pub fn hr_at_k(ranked: &RankedList, target: ItemId, k: usize) -> f64 {
    match ranked.position(target) {
        Some(rank) if rank < k => 1.0,
        _ => 0.0,
    }
}

/// Single-relevant-item NDCG at `k`: `1 / log2(rank + 1)` for a hit at
/// 1-based `rank <= k`, else 0 (the ideal DCG is 1).
pub fn ndcg_at_k(ranked: &RankedList, target: ItemId, k: usize) -> f64 {
    match ranked.position(target) {
        Some(rank) if rank < k => 1.0 / ((rank + 2) as f64).log2(),
        _ => 0.0,
    }
}

/// Root mean squared error over (predicted, actual) pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum_sq: f64 = pairs.iter().map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sum_sq / pairs.len() as f64).sqrt())
}

/// Mean absolute error over (predicted, actual) pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum_abs: f64 = pairs.iter().map(|(p, a)| (p - a).abs()).sum();
    Ok(sum_abs / pairs.len() as f64)
}

/// Which task family a report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTask {
    TopK,
    Rating,
}

/// Evaluation knobs. `alpha_override` pins every user's blend weight to one
/// value (0 reproduces the conventional baseline, 1 trusts the LLM fully),
/// bypassing the adaptive rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k_prime: usize,
    pub cutoffs: Vec<usize>,
    pub history_limit: usize,
    pub alpha_override: Option<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k_prime: 10,
            cutoffs: vec![3, 5],
            history_limit: 10,
            alpha_override: None,
        }
    }
}

/// Averaged metrics plus the accounting needed to reproduce them. The
/// fingerprint hashes every seed and policy knob that shaped the run, so
/// identical configurations yield byte-identical serialized reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: EvalTask,
    pub hr: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub n_evaluated: usize,
    pub llm_fallbacks: usize,
    pub fingerprint: String,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn fingerprint(
    task: EvalTask,
    policy: &AggregationPolicy,
    opts: &EvalOptions,
    client_label: &str,
    model_digest: &str,
) -> String {
    let payload = serde_json::json!({
        "task": task,
        "alpha1": policy.alpha1,
        "alpha2": policy.alpha2,
        "c": policy.c,
        "options": opts,
        "client": client_label,
        "model": model_digest,
    });
    sha256_hex(payload.to_string().as_bytes())
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn model_digest<M: Serialize>(model: &M) -> String {
    sha256_hex(
        serde_json::to_string(model)
            .expect("model serializes")
            .as_bytes(),
    )
}

fn history_entries(
    corpus: &Corpus,
    user: UserId,
    rated_only: bool,
    exclude: Option<ItemId>,
    limit: usize,
) -> Vec<TitledEntry> {
    let entries: Vec<TitledEntry> = corpus
        .user_interactions(user)
        .iter()
        .filter(|it| Some(it.item) != exclude)
        .filter(|it| !rated_only || it.rating.is_some())
        .map(|it| TitledEntry {
            title: corpus.item_title(it.item),
            rating: if rated_only { it.rating } else { None },
        })
        .collect();
    let start = entries.len().saturating_sub(limit);
    entries[start..].to_vec()
}

/// History of the embedding-space nearest neighbor, for the similar-user
/// augmentation block. `None` when no neighbor exists or it has no usable
/// history.
fn most_similar_history<M: UserEmbeddings>(
    model: &M,
    train: &Corpus,
    user: UserId,
    rated_only: bool,
    limit: usize,
) -> Option<Vec<TitledEntry>> {
    let similar = most_similar_user(model, user).ok()?;
    let entries = history_entries(train, similar, rated_only, None, limit);
    (!entries.is_empty()).then_some(entries)
}

/// Evaluate the fused top-k pipeline over every test user: the model's
/// top-k' candidates (train items excluded), a listwise prompt with both
/// augmentation blocks, the client's predicted order, and the adaptive
/// rerank, scored by HR and NDCG at each cutoff against the held-out item.
/// A client or parse failure falls back to the conventional order and is
/// counted, never fatal.
pub fn evaluate_topk<M>(
    model: &M,
    client: &dyn TextCompletion,
    policy: &AggregationPolicy,
    split: &SplitCorpus,
    opts: &EvalOptions,
) -> Result<MetricReport, EvalError>
where
    M: ItemScorer + UserEmbeddings + Serialize,
{
    if let Some(&max_cutoff) = opts.cutoffs.iter().max() {
        if opts.k_prime < max_cutoff {
            return Err(EvalError::CutoffBeyondCandidates {
                cutoff: max_cutoff,
                k_prime: opts.k_prime,
            });
        }
    }
    let train = &split.train;
    let stats = LongTailStats::from_train(train);
    let mut hr_sums: BTreeMap<usize, f64> = opts.cutoffs.iter().map(|&k| (k, 0.0)).collect();
    let mut ndcg_sums: BTreeMap<usize, f64> = opts.cutoffs.iter().map(|&k| (k, 0.0)).collect();
    let mut llm_fallbacks = 0usize;
    let mut n_evaluated = 0usize;

    for (&user, held_out) in &split.test {
        let train_items: Vec<ItemId> = train
            .user_interactions(user)
            .iter()
            .map(|it| it.item)
            .collect();
        let conventional = model.top_k(user, opts.k_prime, &train_items);
        if conventional.is_empty() {
            continue;
        }
        let candidates: Vec<(ItemId, String)> = conventional
            .items()
            .map(|i| (i, train.item_title(i)))
            .collect();

        let mut ctx = PromptContext::for_task(PromptTask::ListwiseRank)
            .with_history(history_entries(
                train,
                user,
                false,
                None,
                opts.history_limit,
            ))
            .with_candidates(candidates.iter().map(|(_, t)| t.clone()).collect());
        if let Some(similar) = most_similar_history(model, train, user, false, opts.history_limit) {
            ctx = augment_with_similar_user(ctx, &similar).expect("non-empty history");
        }
        let conv_prediction = candidates
            .iter()
            .map(|(_, t)| t.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        ctx = augment_with_model_prediction(ctx, &conv_prediction).expect("non-empty prediction");

        let ids: Vec<ItemId> = candidates.iter().map(|(i, _)| *i).collect();
        let llm_order = Prompt::render(PromptTask::ListwiseRank, &ctx, Some(user), &ids)
            .map_err(|_| ())
            .and_then(|prompt| client.complete(&prompt).map_err(|_| ()))
            .and_then(|response| parse_ranked_list(&response.text, &candidates).map_err(|_| ()));

        let fused = match llm_order {
            Ok(order) => {
                let alpha = match opts.alpha_override {
                    Some(a) => a,
                    None => stats.alpha_for(user, policy)?,
                };
                aggregate_rerank(&conventional, &order, alpha, policy.c)?
            }
            Err(()) => {
                llm_fallbacks += 1;
                conventional.clone()
            }
        };

        for &k in &opts.cutoffs {
            *hr_sums.get_mut(&k).unwrap() += hr_at_k(&fused, held_out.item, k);
            *ndcg_sums.get_mut(&k).unwrap() += ndcg_at_k(&fused, held_out.item, k);
        }
        n_evaluated += 1;
    }

    if n_evaluated == 0 {
        return Err(EvalError::EmptyInput);
    }
    let n = n_evaluated as f64;
    Ok(MetricReport {
        task: EvalTask::TopK,
        hr: hr_sums.into_iter().map(|(k, s)| (k, s / n)).collect(),
        ndcg: ndcg_sums.into_iter().map(|(k, s)| (k, s / n)).collect(),
        rmse: None,
        mae: None,
        n_evaluated,
        llm_fallbacks,
        fingerprint: fingerprint(
            EvalTask::TopK,
            policy,
            opts,
            &client.label(),
            &model_digest(model),
        ),
    })
}

/// Evaluate fused rating prediction over every rated test pair: the
/// conventional prediction, a rating prompt with both augmentation blocks,
/// the parsed LLM rating, and the adaptive interpolation, scored by RMSE
/// and MAE. Client failures fall back to the conventional prediction.
pub fn evaluate_rating(
    model: &RatingModel,
    client: &dyn TextCompletion,
    policy: &AggregationPolicy,
    split: &SplitCorpus,
    opts: &EvalOptions,
) -> Result<MetricReport, EvalError> {
    let train = &split.train;
    let scale = train.rating_scale();
    let stats = LongTailStats::from_train(train);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut llm_fallbacks = 0usize;

    for (&user, held_out) in &split.test {
        let Some(actual) = held_out.rating else {
            continue;
        };
        let conventional = model.predict(user, held_out.item)?;
        let history = history_entries(train, user, true, None, opts.history_limit);
        let llm_value = if history.is_empty() {
            Err(())
        } else {
            let mut ctx = PromptContext::for_task(PromptTask::RatingPredict)
                .with_history(history)
                .with_candidates(vec![train.item_title(held_out.item)]);
            if let Some(similar) =
                most_similar_history(model, train, user, true, opts.history_limit)
            {
                ctx = augment_with_similar_user(ctx, &similar).expect("non-empty history");
            }
            ctx = augment_with_model_prediction(ctx, &format_rating(conventional))
                .expect("non-empty prediction");
            Prompt::render(
                PromptTask::RatingPredict,
                &ctx,
                Some(user),
                &[held_out.item],
            )
            .map_err(|_| ())
            .and_then(|prompt| client.complete(&prompt).map_err(|_| ()))
            .and_then(|response| parse_rating(&response.text, scale).map_err(|_| ()))
        };

        let fused = match llm_value {
            Ok(llm) => {
                let alpha = match opts.alpha_override {
                    Some(a) => a,
                    None => stats.alpha_for(user, policy)?,
                };
                aggregate_rating(alpha, llm, conventional)?
            }
            Err(()) => {
                llm_fallbacks += 1;
                conventional
            }
        };
        pairs.push((fused, actual));
    }

    Ok(MetricReport {
        task: EvalTask::Rating,
        hr: BTreeMap::new(),
        ndcg: BTreeMap::new(),
        rmse: Some(rmse(&pairs)?),
        mae: Some(mae(&pairs)?),
        n_evaluated: pairs.len(),
        llm_fallbacks,
        fingerprint: fingerprint(
            EvalTask::Rating,
            policy,
            opts,
            &client.label(),
            &model_digest(model),
        ),
    })
}
