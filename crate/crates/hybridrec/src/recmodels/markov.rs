//! First-order transition model over per-user item sequences, with a
//! popularity backoff for unseen contexts.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ItemId};

/// Popularity backoff weight in [`next_item_scores`].
pub const POPULARITY_BACKOFF: f64 = 1e-6;

/// Adjacent-pair transition counts plus per-item popularity, both taken
/// from timestamp-ordered training sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovSequentialModel {
    n_items: usize,
    /// Outgoing transitions per predecessor item, sorted by successor id.
    transitions: Vec<Vec<(ItemId, u64)>>,
    item_popularity: Vec<u64>,
}

impl MarkovSequentialModel {
    /// Count adjacent pairs and item occurrences over explicit sequences.
    pub fn from_sequences<S: AsRef<[ItemId]>>(n_items: usize, sequences: &[S]) -> Self {
        let mut transitions: Vec<Vec<(ItemId, u64)>> = vec![Vec::new(); n_items];
        let mut item_popularity = vec![0u64; n_items];
        for seq in sequences {
            let seq = seq.as_ref();
            for item in seq {
                item_popularity[item.idx()] += 1;
            }
            for pair in seq.windows(2) {
                let (from, to) = (pair[0], pair[1]);
                let row = &mut transitions[from.idx()];
                match row.binary_search_by_key(&to, |(i, _)| *i) {
                    Ok(pos) => row[pos].1 += 1,
                    Err(pos) => row.insert(pos, (to, 1)),
                }
            }
        }
        MarkovSequentialModel {
            n_items,
            transitions,
            item_popularity,
        }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Number of observed `a -> b` adjacencies.
    pub fn transition_count(&self, from: ItemId, to: ItemId) -> u64 {
        self.transitions[from.idx()]
            .binary_search_by_key(&to, |(i, _)| *i)
            .map(|pos| self.transitions[from.idx()][pos].1)
            .unwrap_or(0)
    }

    pub fn popularity(&self, item: ItemId) -> u64 {
        self.item_popularity[item.idx()]
    }

    /// Total transition mass, `sum_u max(0, len(seq_u) - 1)`.
    pub fn total_transitions(&self) -> u64 {
        self.transitions
            .iter()
            .flat_map(|row| row.iter().map(|(_, c)| *c))
            .sum()
    }
}

/// Count adjacent pairs and item occurrences over each user's
/// timestamp-ordered sequence.
pub fn train_markov_seq(train: &Corpus) -> MarkovSequentialModel {
    let sequences: Vec<Vec<ItemId>> = train
        .users()
        .map(|u| {
            train
                .user_interactions(u)
                .iter()
                .map(|it| it.item)
                .collect()
        })
        .collect();
    MarkovSequentialModel::from_sequences(train.n_items(), &sequences)
}

/// Score every item as a next-item candidate after `history`:
/// `count(last, i) + 1e-6 * popularity(i)`. An empty history or an unseen
/// last item degrades to the popularity ranking.
pub fn next_item_scores(model: &MarkovSequentialModel, history: &[ItemId]) -> Vec<f64> {
    let mut scores: Vec<f64> = model
        .item_popularity
        .iter()
        .map(|&p| POPULARITY_BACKOFF * p as f64)
        .collect();
    if let Some(&last) = history.last() {
        if last.idx() < model.n_items {
            for &(to, count) in &model.transitions[last.idx()] {
                scores[to.idx()] += count as f64;
            }
        }
    }
    scores
}
