//! A deterministic stand-in for the tuned language model, driven by a
//! ground-truth rating table and an optional held-out item per user. Every
//! pipeline test runs against it without any model weights.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{format_rating, LLMResponse, LlmError, Prompt, PromptTask, TextCompletion};
use crate::corpus::{ItemId, SplitCorpus, UserId};

/// Deterministic oracle client. Responses are a pure function of the
/// rating table, the held-out map, and the noise seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MockOracle {
    ratings: BTreeMap<(UserId, ItemId), f64>,
    held_out: BTreeMap<UserId, ItemId>,
    noise_std: f64,
    seed: u64,
}

impl MockOracle {
    pub fn new(
        ratings: BTreeMap<(UserId, ItemId), f64>,
        held_out: BTreeMap<UserId, ItemId>,
        seed: u64,
    ) -> Self {
        MockOracle {
            ratings,
            held_out,
            noise_std: 0.0,
            seed,
        }
    }

    /// An oracle that knows the full split: its table carries every rated
    /// interaction (train, validation, and test) and its held-out map is
    /// the test set.
    pub fn from_split(split: &SplitCorpus) -> Self {
        let mut ratings = BTreeMap::new();
        for it in split.train.interactions() {
            if let Some(r) = it.rating {
                ratings.insert((it.user, it.item), r);
            }
        }
        for held in split.validation.values().chain(split.test.values()) {
            if let Some(r) = held.rating {
                ratings.insert((held.user, held.item), r);
            }
        }
        let held_out = split.test.iter().map(|(u, it)| (*u, it.item)).collect();
        MockOracle::new(ratings, held_out, 0)
    }

    /// Add seeded gaussian noise to rating answers.
    pub fn with_noise(mut self, std_dev: f64) -> Self {
        self.noise_std = std_dev;
        self
    }

    pub fn rating_for(&self, user: UserId, item: ItemId) -> Option<f64> {
        self.ratings.get(&(user, item)).copied()
    }

    /// Ranking value: the table entry, or negative infinity for unrated
    /// pairs so they sort behind every rated one.
    pub fn rank_value(&self, user: Option<UserId>, item: ItemId) -> f64 {
        match user {
            Some(u) => self.rating_for(u, item).unwrap_or(f64::NEG_INFINITY),
            None => f64::NEG_INFINITY,
        }
    }

    fn user_mean(&self, user: UserId) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for ((u, _), r) in self
            .ratings
            .range((user, ItemId(0))..=(user, ItemId(u32::MAX)))
        {
            debug_assert_eq!(*u, user);
            sum += r;
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }

    fn global_mean(&self) -> f64 {
        if self.ratings.is_empty() {
            return 0.0;
        }
        self.ratings.values().sum::<f64>() / self.ratings.len() as f64
    }

    /// The rating answer for a target: the ground-truth entry when the pair
    /// is rated, otherwise the user's mean rating (global mean as the last
    /// resort), plus optional seeded noise.
    pub fn predicted_rating(&self, user: Option<UserId>, item: ItemId) -> f64 {
        let base = user
            .and_then(|u| self.rating_for(u, item))
            .or_else(|| user.and_then(|u| self.user_mean(u)))
            .unwrap_or_else(|| self.global_mean());
        if self.noise_std > 0.0 {
            let mix = user.map(|u| u.0 as u64).unwrap_or(u64::MAX) ^ ((item.0 as u64) << 32);
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ mix);
            let normal = Normal::new(0.0, self.noise_std).expect("valid std dev");
            base + normal.sample(&mut rng)
        } else {
            base
        }
    }

    /// Candidate indices ordered the way the oracle ranks them: a held-out
    /// item first, then ground-truth value descending, conventional
    /// position breaking ties.
    fn ranked_candidates(&self, prompt: &Prompt) -> Vec<usize> {
        let held = prompt.user.and_then(|u| self.held_out.get(&u).copied());
        let mut order: Vec<usize> = (0..prompt.candidates.len()).collect();
        order.sort_by(|&a, &b| {
            let (item_a, item_b) = (prompt.candidates[a].0, prompt.candidates[b].0);
            let held_a = Some(item_a) == held;
            let held_b = Some(item_b) == held;
            held_b
                .cmp(&held_a)
                .then(
                    self.rank_value(prompt.user, item_b)
                        .partial_cmp(&self.rank_value(prompt.user, item_a))
                        .unwrap(),
                )
                .then(a.cmp(&b))
        });
        order
    }

    fn respond(&self, prompt: &Prompt) -> Result<String, LlmError> {
        let need_candidates = |count: usize| {
            if prompt.candidates.len() < count {
                Err(LlmError::MissingField {
                    task: prompt.task,
                    field: "candidates",
                })
            } else {
                Ok(())
            }
        };
        match prompt.task {
            PromptTask::ListwiseRank => {
                need_candidates(1)?;
                let titles: Vec<&str> = self
                    .ranked_candidates(prompt)
                    .into_iter()
                    .map(|idx| prompt.candidates[idx].1.as_str())
                    .collect();
                Ok(titles.join("; "))
            }
            PromptTask::PairRank => {
                need_candidates(2)?;
                let order = self.ranked_candidates(prompt);
                Ok(format!(
                    "{}; {}",
                    prompt.candidates[order[0]].1, prompt.candidates[order[1]].1
                ))
            }
            PromptTask::NextItemPick => {
                need_candidates(1)?;
                let best = self.ranked_candidates(prompt)[0];
                Ok(prompt.candidates[best].1.clone())
            }
            PromptTask::RatingPredict | PromptTask::PointwiseRate => {
                need_candidates(1)?;
                let target = prompt.candidates[0].0;
                Ok(format_rating(self.predicted_rating(prompt.user, target)))
            }
            PromptTask::AttributeElicit => {
                need_candidates(1)?;
                let title = &prompt.candidates[0].1;
                let lines: Vec<String> = prompt
                    .expected_attributes
                    .iter()
                    .map(|key| format!("{key}: {key} of {title}"))
                    .collect();
                if lines.is_empty() {
                    return Err(LlmError::MissingField {
                        task: prompt.task,
                        field: "expected attributes",
                    });
                }
                Ok(lines.join("\n"))
            }
        }
    }
}

impl TextCompletion for MockOracle {
    fn complete(&self, prompt: &Prompt) -> Result<LLMResponse, LlmError> {
        Ok(LLMResponse {
            text: self.respond(prompt)?,
            latency_ms: 0,
            attempts: 1,
        })
    }

    fn label(&self) -> String {
        "mock".to_string()
    }
}
