//! Reference conventional recommenders behind pluggable scoring traits:
//! a pairwise-ranking matrix factorization ([`MFModel`]), a biased rating
//! factorization ([`RatingModel`]), and a first-order transition model
//! ([`MarkovSequentialModel`]).
//!
//! Training is seeded and single-threaded per model; a fixed corpus and
//! config produce bitwise-identical parameters. Trained models are
//! immutable, so scoring and similarity lookups are safe for concurrent
//! readers.

mod io;
mod markov;
mod mf;
mod rating;

pub use io::{load_markov, load_mf, load_rating, save_markov, save_mf, save_rating};
pub use markov::{next_item_scores, train_markov_seq, MarkovSequentialModel};
pub use mf::{bpr_loss, train_mf_bpr, train_mf_bpr_with_triples, MFModel};
pub use rating::{predict_rating, train_rating_mf, RatingModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ItemId, UserId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training diverged at epoch {epoch}: non-finite parameter")]
    DivergedTraining { epoch: usize },
    #[error("{kind} id {id} out of range (bound {bound})")]
    IdOutOfRange {
        kind: &'static str,
        id: u32,
        bound: usize,
    },
    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no candidate user with a non-zero embedding")]
    NoCandidate,
    #[error("training corpus has no rated interactions")]
    NoRatings,
    #[error("bad model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyper-parameters shared by the trainers. `rng_seed` pins initialization
/// and every sampling decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimension: usize,
    pub learning_rate: f64,
    pub l2_regularization: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dimension: 16,
            learning_rate: 0.05,
            l2_regularization: 0.01,
            epochs: 20,
            negatives_per_positive: 1,
            rng_seed: 42,
        }
    }
}

/// An ordered recommendation list, strictly descending by score after the
/// deterministic tie-break (lower item id first). No duplicate items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    entries: Vec<(ItemId, f64)>,
}

impl RankedList {
    /// Sort scored items into ranked order.
    pub fn from_scores(scores: impl IntoIterator<Item = (ItemId, f64)>) -> Self {
        let mut entries: Vec<(ItemId, f64)> = scores.into_iter().collect();
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        RankedList { entries }
    }

    /// Wrap entries that are already in ranked order.
    pub(crate) fn from_ordered(entries: Vec<(ItemId, f64)>) -> Self {
        RankedList { entries }
    }

    pub fn entries(&self) -> &[(ItemId, f64)] {
        &self.entries
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    /// Zero-based rank of `item`, if present.
    pub fn position(&self, item: ItemId) -> Option<usize> {
        self.entries.iter().position(|(i, _)| *i == item)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Anything that can score every item for a user. `top_k` is derived from
/// the scores with the shared tie-break.
pub trait ItemScorer {
    fn n_scored_items(&self) -> usize;

    fn score_item(&self, user: UserId, item: ItemId) -> f64;

    /// The `k` highest-scoring items not in `exclude`. Asking for more items
    /// than exist returns everything available.
    fn top_k(&self, user: UserId, k: usize, exclude: &[ItemId]) -> RankedList {
        let excluded: std::collections::BTreeSet<ItemId> = exclude.iter().copied().collect();
        let scored = (0..self.n_scored_items() as u32)
            .map(ItemId)
            .filter(|i| !excluded.contains(i))
            .map(|i| (i, self.score_item(user, i)));
        let ranked = RankedList::from_scores(scored);
        RankedList::from_ordered(ranked.entries[..ranked.len().min(k)].to_vec())
    }
}

/// Models that expose per-user embeddings for similarity lookups.
pub trait UserEmbeddings {
    fn n_embedded_users(&self) -> usize;

    fn user_embedding(&self, user: UserId) -> &[f64];
}

/// Cosine of the angle between two equal-length, non-zero vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ModelError> {
    if a.len() != b.len() {
        return Err(ModelError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(ModelError::ZeroVector);
    }
    // Rounding can push |cos| a hair past 1; keep the contract range.
    Ok((dot / (norm_a * norm_b)).clamp(-1.0, 1.0))
}

/// The user most similar to `user` by embedding cosine, self excluded, ties
/// broken by lower user id. Users with zero embeddings are not candidates.
pub fn most_similar_user<M: UserEmbeddings>(model: &M, user: UserId) -> Result<UserId, ModelError> {
    if user.idx() >= model.n_embedded_users() {
        return Err(ModelError::IdOutOfRange {
            kind: "user",
            id: user.0,
            bound: model.n_embedded_users(),
        });
    }
    let anchor = model.user_embedding(user);
    let mut best: Option<(f64, UserId)> = None;
    for v in (0..model.n_embedded_users() as u32).map(UserId) {
        if v == user {
            continue;
        }
        let sim = match cosine_similarity(anchor, model.user_embedding(v)) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let better = match best {
            None => true,
            Some((best_sim, best_user)) => sim > best_sim || (sim == best_sim && v < best_user),
        };
        if better {
            best = Some((sim, v));
        }
    }
    best.map(|(_, v)| v).ok_or(ModelError::NoCandidate)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-ln(sigmoid(x))`, evaluated as softplus(-x) to stay finite for large
/// negative margins.
pub(crate) fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
