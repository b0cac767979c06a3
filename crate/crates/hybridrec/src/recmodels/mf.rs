//! Matrix factorization trained with the pairwise ranking loss
//! `-log sigmoid(score(u,i) - score(u,j))` over (user, positive, negative)
//! triples, plus L2 regularization.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    all_finite, neg_log_sigmoid, sigmoid, ItemScorer, ModelError, TrainConfig, UserEmbeddings,
};
use crate::corpus::{Corpus, ItemId, UserId};

/// User and item factors of one pairwise-ranking MF model. Scores are plain
/// dot products of the factor rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MFModel {
    dim: usize,
    n_users: usize,
    n_items: usize,
    user_embeddings: Vec<f64>,
    item_embeddings: Vec<f64>,
}

impl MFModel {
    /// A model with explicit factor rows; embeddings are flattened row-major.
    pub fn from_parts(
        dim: usize,
        user_embeddings: Vec<Vec<f64>>,
        item_embeddings: Vec<Vec<f64>>,
    ) -> Self {
        let n_users = user_embeddings.len();
        let n_items = item_embeddings.len();
        MFModel {
            dim,
            n_users,
            n_items,
            user_embeddings: user_embeddings.into_iter().flatten().collect(),
            item_embeddings: item_embeddings.into_iter().flatten().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn item_embedding(&self, item: ItemId) -> &[f64] {
        let o = item.idx() * self.dim;
        &self.item_embeddings[o..o + self.dim]
    }

    /// Predicted preference of `user` for `item`: the factor dot product.
    pub fn score(&self, user: UserId, item: ItemId) -> Result<f64, ModelError> {
        if user.idx() >= self.n_users {
            return Err(ModelError::IdOutOfRange {
                kind: "user",
                id: user.0,
                bound: self.n_users,
            });
        }
        if item.idx() >= self.n_items {
            return Err(ModelError::IdOutOfRange {
                kind: "item",
                id: item.0,
                bound: self.n_items,
            });
        }
        Ok(self.dot(user, item))
    }

    fn dot(&self, user: UserId, item: ItemId) -> f64 {
        let u = user.idx() * self.dim;
        let i = item.idx() * self.dim;
        (0..self.dim)
            .map(|f| self.user_embeddings[u + f] * self.item_embeddings[i + f])
            .sum()
    }

    /// Multiply every embedding entry by `c`. Orders derived from scores and
    /// cosines are invariant under positive scaling.
    pub fn scale_embeddings(&mut self, c: f64) {
        for v in self
            .user_embeddings
            .iter_mut()
            .chain(self.item_embeddings.iter_mut())
        {
            *v *= c;
        }
    }
}

impl ItemScorer for MFModel {
    fn n_scored_items(&self) -> usize {
        self.n_items
    }

    fn score_item(&self, user: UserId, item: ItemId) -> f64 {
        self.dot(user, item)
    }
}

impl UserEmbeddings for MFModel {
    fn n_embedded_users(&self) -> usize {
        self.n_users
    }

    fn user_embedding(&self, user: UserId) -> &[f64] {
        let o = user.idx() * self.dim;
        &self.user_embeddings[o..o + self.dim]
    }
}

/// Sum over triples of `-ln sigmoid(score(u,i) - score(u,j))`. At an
/// all-zero model this is exactly `triples.len() * ln 2`.
///
/// Ids must be in range; out-of-range ids panic.
pub fn bpr_loss(model: &MFModel, triples: &[(UserId, ItemId, ItemId)]) -> f64 {
    triples
        .iter()
        .map(|&(u, i, j)| neg_log_sigmoid(model.dot(u, i) - model.dot(u, j)))
        .sum()
}

/// Train on the corpus positives alone; see [`train_mf_bpr_with_triples`].
pub fn train_mf_bpr(train: &Corpus, config: &TrainConfig) -> Result<MFModel, ModelError> {
    train_mf_bpr_with_triples(train, &[], config)
}

/// SGD over uniformly sampled (user, positive, negative) triples from the
/// corpus, plus the explicit `extra` triples, for `config.epochs` epochs.
/// Factors initialize from N(0, 0.01) seeded by `config.rng_seed`; the
/// final-epoch model is returned.
pub fn train_mf_bpr_with_triples(
    train: &Corpus,
    extra: &[(UserId, ItemId, ItemId)],
    config: &TrainConfig,
) -> Result<MFModel, ModelError> {
    assert!(
        config.negatives_per_positive >= 1,
        "negatives_per_positive must be >= 1"
    );
    let n_users = train.n_users();
    let n_items = train.n_items();
    let dim = config.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let normal = Normal::new(0.0, 0.01).expect("valid std dev");

    let mut user_emb: Vec<f64> = (0..n_users * dim)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let mut item_emb: Vec<f64> = (0..n_items * dim)
        .map(|_| normal.sample(&mut rng))
        .collect();

    // Sorted positive-item lists per user, for rejection sampling.
    let mut positives: Vec<Vec<u32>> = vec![Vec::new(); n_users];
    for it in train.interactions() {
        positives[it.user.idx()].push(it.item.0);
    }
    for items in &mut positives {
        items.sort_unstable();
    }

    enum Slot {
        Implicit(usize),
        Explicit(usize),
    }
    let mut slots: Vec<Slot> = Vec::new();
    for idx in 0..train.interactions().len() {
        for _ in 0..config.negatives_per_positive {
            slots.push(Slot::Implicit(idx));
        }
    }
    for idx in 0..extra.len() {
        slots.push(Slot::Explicit(idx));
    }

    let lr = config.learning_rate;
    let reg = config.l2_regularization;
    for epoch in 0..config.epochs {
        slots.shuffle(&mut rng);
        for slot in &slots {
            let (u, i, j) = match slot {
                Slot::Implicit(idx) => {
                    let it = train.interactions()[*idx];
                    let user_pos = &positives[it.user.idx()];
                    if user_pos.len() >= n_items {
                        continue; // no negative exists for this user
                    }
                    let j = loop {
                        let cand = rng.gen_range(0..n_items as u32);
                        if user_pos.binary_search(&cand).is_err() {
                            break ItemId(cand);
                        }
                    };
                    (it.user, it.item, j)
                }
                Slot::Explicit(idx) => extra[*idx],
            };
            let uo = u.idx() * dim;
            let io = i.idx() * dim;
            let jo = j.idx() * dim;
            let mut x = 0.0;
            for f in 0..dim {
                x += user_emb[uo + f] * (item_emb[io + f] - item_emb[jo + f]);
            }
            let g = sigmoid(-x);
            for f in 0..dim {
                let wu = user_emb[uo + f];
                let wi = item_emb[io + f];
                let wj = item_emb[jo + f];
                user_emb[uo + f] = wu + lr * (g * (wi - wj) - reg * wu);
                item_emb[io + f] = wi + lr * (g * wu - reg * wi);
                item_emb[jo + f] = wj + lr * (-g * wu - reg * wj);
            }
        }
        if !all_finite(&user_emb) || !all_finite(&item_emb) {
            return Err(ModelError::DivergedTraining { epoch });
        }
    }

    Ok(MFModel {
        dim,
        n_users,
        n_items,
        user_embeddings: user_emb,
        item_embeddings: item_emb,
    })
}
