//! Biased matrix factorization for rating prediction:
//! `mu + b_u + b_i + e_u . e_i`, fit by SGD on squared error and clipped to
//! the corpus rating scale at prediction time.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{all_finite, ItemScorer, ModelError, TrainConfig, UserEmbeddings};
use crate::corpus::{Corpus, ItemId, UserId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingModel {
    dim: usize,
    global_mean: f64,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_embeddings: Vec<f64>,
    item_embeddings: Vec<f64>,
    rating_scale: (f64, f64),
}

impl RatingModel {
    pub fn from_parts(
        dim: usize,
        global_mean: f64,
        user_bias: Vec<f64>,
        item_bias: Vec<f64>,
        user_embeddings: Vec<Vec<f64>>,
        item_embeddings: Vec<Vec<f64>>,
        rating_scale: (f64, f64),
    ) -> Self {
        RatingModel {
            dim,
            global_mean,
            user_bias,
            item_bias,
            user_embeddings: user_embeddings.into_iter().flatten().collect(),
            item_embeddings: item_embeddings.into_iter().flatten().collect(),
            rating_scale,
        }
    }

    pub fn n_users(&self) -> usize {
        self.user_bias.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_bias.len()
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn rating_scale(&self) -> (f64, f64) {
        self.rating_scale
    }

    fn clip(&self, raw: f64) -> f64 {
        raw.clamp(self.rating_scale.0, self.rating_scale.1)
    }

    fn raw(&self, user: UserId, item: ItemId) -> f64 {
        let u = user.idx() * self.dim;
        let i = item.idx() * self.dim;
        let dot: f64 = (0..self.dim)
            .map(|f| self.user_embeddings[u + f] * self.item_embeddings[i + f])
            .sum();
        self.global_mean + self.user_bias[user.idx()] + self.item_bias[item.idx()] + dot
    }

    /// Clipped rating prediction. An unknown user falls back to
    /// `mu + b_i`; an unknown item is an error.
    pub fn predict(&self, user: UserId, item: ItemId) -> Result<f64, ModelError> {
        if item.idx() >= self.n_items() {
            return Err(ModelError::IdOutOfRange {
                kind: "item",
                id: item.0,
                bound: self.n_items(),
            });
        }
        if user.idx() >= self.n_users() {
            return Ok(self.clip(self.global_mean + self.item_bias[item.idx()]));
        }
        Ok(self.clip(self.raw(user, item)))
    }
}

impl ItemScorer for RatingModel {
    fn n_scored_items(&self) -> usize {
        self.n_items()
    }

    fn score_item(&self, user: UserId, item: ItemId) -> f64 {
        self.clip(self.raw(user, item))
    }
}

impl UserEmbeddings for RatingModel {
    fn n_embedded_users(&self) -> usize {
        self.n_users()
    }

    fn user_embedding(&self, user: UserId) -> &[f64] {
        let o = user.idx() * self.dim;
        &self.user_embeddings[o..o + self.dim]
    }
}

/// Free-function form of [`RatingModel::predict`].
pub fn predict_rating(model: &RatingModel, user: UserId, item: ItemId) -> Result<f64, ModelError> {
    model.predict(user, item)
}

/// Fit the biased MF on the corpus's rated interactions. The global mean
/// initializes to the train-set mean rating; biases start at zero. User
/// factors draw from N(0, 0.01) while item factors start at zero, so the
/// untrained model predicts exactly the mean everywhere and the interaction
/// term still becomes trainable after the first epoch.
pub fn train_rating_mf(train: &Corpus, config: &TrainConfig) -> Result<RatingModel, ModelError> {
    let rated: Vec<(UserId, ItemId, f64)> = train
        .interactions()
        .iter()
        .filter_map(|it| it.rating.map(|r| (it.user, it.item, r)))
        .collect();
    if rated.is_empty() {
        return Err(ModelError::NoRatings);
    }
    let n_users = train.n_users();
    let n_items = train.n_items();
    let dim = config.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let normal = Normal::new(0.0, 0.01).expect("valid std dev");

    let global_mean = rated.iter().map(|(_, _, r)| *r).sum::<f64>() / rated.len() as f64;
    let mut user_bias = vec![0.0; n_users];
    let mut item_bias = vec![0.0; n_items];
    let mut user_emb: Vec<f64> = (0..n_users * dim)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let mut item_emb = vec![0.0; n_items * dim];

    let lr = config.learning_rate;
    let reg = config.l2_regularization;
    let mut order: Vec<usize> = (0..rated.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (u, i, r) = rated[idx];
            let uo = u.idx() * dim;
            let io = i.idx() * dim;
            let mut dot = 0.0;
            for f in 0..dim {
                dot += user_emb[uo + f] * item_emb[io + f];
            }
            let pred = global_mean + user_bias[u.idx()] + item_bias[i.idx()] + dot;
            let err = r - pred;
            user_bias[u.idx()] += lr * (err - reg * user_bias[u.idx()]);
            item_bias[i.idx()] += lr * (err - reg * item_bias[i.idx()]);
            for f in 0..dim {
                let wu = user_emb[uo + f];
                let wi = item_emb[io + f];
                user_emb[uo + f] = wu + lr * (err * wi - reg * wu);
                item_emb[io + f] = wi + lr * (err * wu - reg * wi);
            }
        }
        if !(all_finite(&user_bias)
            && all_finite(&item_bias)
            && all_finite(&user_emb)
            && all_finite(&item_emb))
        {
            return Err(ModelError::DivergedTraining { epoch });
        }
    }

    Ok(RatingModel {
        dim,
        global_mean,
        user_bias,
        item_bias,
        user_embeddings: user_emb,
        item_embeddings: item_emb,
        rating_scale: train.rating_scale(),
    })
}
