//! Long-tail-adaptive fusion of conventional and LLM predictions.
//!
//! Every user gets a long-tail coefficient `l_u = ln(N(u) + 1)` from their
//! interaction count. The per-user blend weight
//!
//! ```text
//! alpha_u = max((l_max - l_u) / (l_max - l_min), alpha_2) * alpha_1
//! ```
//!
//! grows as the user moves into the tail, so sparse users lean on the LLM
//! and well-observed users lean on the conventional model. Ratings fuse by
//! linear interpolation; ranked lists fuse by interpolating position
//! utilities `-s * C` from both orderings and re-sorting.
//!
//! All functions here are pure and safe for unrestricted concurrent use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, ItemId, UserId};
use crate::recmodels::RankedList;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("LLM order is not a permutation of the candidate list")]
    IncompletePermutation,
}

/// Fusion hyper-parameters. `alpha_2 < 1` is the cut-off weight; `c > 0`
/// scales the position utilities and defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationPolicy {
    pub alpha1: f64,
    pub alpha2: f64,
    pub c: f64,
}

impl AggregationPolicy {
    /// Validated constructor. `alpha1` admits 0 so a zero-weight policy can
    /// express the pure-conventional baseline.
    pub fn new(alpha1: f64, alpha2: f64, c: f64) -> Result<Self, AggregateError> {
        if !(0.0..=1.0).contains(&alpha1) {
            return Err(AggregateError::DomainError(format!(
                "alpha1 must lie in [0, 1], got {alpha1}"
            )));
        }
        if !(0.0..1.0).contains(&alpha2) {
            return Err(AggregateError::DomainError(format!(
                "alpha2 must lie in [0, 1), got {alpha2}"
            )));
        }
        if c <= 0.0 {
            return Err(AggregateError::DomainError(format!(
                "c must be positive, got {c}"
            )));
        }
        Ok(AggregationPolicy { alpha1, alpha2, c })
    }
}

impl Default for AggregationPolicy {
    fn default() -> Self {
        AggregationPolicy {
            alpha1: 0.5,
            alpha2: 0.3,
            c: 1.0,
        }
    }
}

/// Per-user long-tail coefficients and their population extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTailStats {
    coefficients: Vec<f64>,
    l_max: f64,
    l_min: f64,
}

impl LongTailStats {
    /// Coefficients from per-user interaction counts.
    pub fn from_counts(counts: &[u64]) -> Self {
        let coefficients: Vec<f64> = counts.iter().map(|&n| long_tail_coefficient(n)).collect();
        let l_max = coefficients
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let l_min = coefficients.iter().copied().fold(f64::INFINITY, f64::min);
        LongTailStats {
            coefficients,
            l_max,
            l_min,
        }
    }

    /// Coefficients from training-corpus interaction counts (held-out
    /// interactions never contribute).
    pub fn from_train(train: &Corpus) -> Self {
        let counts: Vec<u64> = train
            .users()
            .map(|u| train.user_interactions(u).len() as u64)
            .collect();
        Self::from_counts(&counts)
    }

    pub fn coefficient(&self, user: UserId) -> f64 {
        self.coefficients[user.idx()]
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn l_min(&self) -> f64 {
        self.l_min
    }

    /// The blend weight for one user under `policy`.
    pub fn alpha_for(
        &self,
        user: UserId,
        policy: &AggregationPolicy,
    ) -> Result<f64, AggregateError> {
        adaptive_alpha(self.coefficient(user), self.l_max, self.l_min, policy)
    }
}

/// `ln(n + 1)`: zero for a user with no interactions, growing slowly with
/// feedback volume.
pub fn long_tail_coefficient(n_interactions: u64) -> f64 {
    ((n_interactions + 1) as f64).ln()
}

/// The per-user blend weight. Requires `l_min <= l_u <= l_max`; a
/// degenerate population (`l_max == l_min`) takes the full weight `alpha1`.
pub fn adaptive_alpha(
    l_u: f64,
    l_max: f64,
    l_min: f64,
    policy: &AggregationPolicy,
) -> Result<f64, AggregateError> {
    if !(l_min <= l_u && l_u <= l_max) {
        return Err(AggregateError::DomainError(format!(
            "l_u {l_u} outside [{l_min}, {l_max}]"
        )));
    }
    if l_max == l_min {
        return Ok(policy.alpha1);
    }
    let ratio = (l_max - l_u) / (l_max - l_min);
    Ok(ratio.max(policy.alpha2) * policy.alpha1)
}

/// Linear interpolation `alpha * u_llm + (1 - alpha) * u_rec`. The
/// endpoints reproduce their inputs exactly.
pub fn aggregate_rating(alpha_u: f64, u_llm: f64, u_rec: f64) -> Result<f64, AggregateError> {
    if !(0.0..=1.0).contains(&alpha_u) {
        return Err(AggregateError::DomainError(format!(
            "alpha_u must lie in [0, 1], got {alpha_u}"
        )));
    }
    Ok(alpha_u * u_llm + (1.0 - alpha_u) * u_rec)
}

/// Utilities for conventional positions 1..=k': `[-C, -2C, ..., -k'C]`.
pub fn position_utilities(k_prime: usize, c: f64) -> Vec<f64> {
    (1..=k_prime).map(|s| -(s as f64) * c).collect()
}

/// Utility per item from the LLM's predicted order: the item at position j
/// (1-based) gets `-j * C`, so utilities are non-increasing down the list.
/// Duplicate items cannot form a permutation and are rejected.
pub fn llm_position_utilities(
    parsed: &[ItemId],
    c: f64,
) -> Result<Vec<(ItemId, f64)>, AggregateError> {
    let mut seen = std::collections::BTreeSet::new();
    for item in parsed {
        if !seen.insert(*item) {
            return Err(AggregateError::IncompletePermutation);
        }
    }
    Ok(parsed
        .iter()
        .enumerate()
        .map(|(idx, item)| (*item, -((idx + 1) as f64) * c))
        .collect())
}

/// Fuse a conventional ranking with the LLM's predicted order of the same
/// items: `U(i) = alpha_u * U_llm(i) + (1 - alpha_u) * U_rec(i)`, sorted
/// descending with ties going to the earlier conventional position.
pub fn aggregate_rerank(
    conventional: &RankedList,
    llm_order: &[ItemId],
    alpha_u: f64,
    c: f64,
) -> Result<RankedList, AggregateError> {
    if !(0.0..=1.0).contains(&alpha_u) {
        return Err(AggregateError::DomainError(format!(
            "alpha_u must lie in [0, 1], got {alpha_u}"
        )));
    }
    if llm_order.len() != conventional.len() {
        return Err(AggregateError::IncompletePermutation);
    }
    let llm_utilities = llm_position_utilities(llm_order, c)?;
    let mut fused: Vec<(usize, ItemId, f64)> = Vec::with_capacity(conventional.len());
    for (item, u_llm) in llm_utilities {
        let conv_pos = conventional
            .position(item)
            .ok_or(AggregateError::IncompletePermutation)?;
        let u_rec = -((conv_pos + 1) as f64) * c;
        fused.push((conv_pos, item, alpha_u * u_llm + (1.0 - alpha_u) * u_rec));
    }
    fused.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    Ok(RankedList::from_ordered(
        fused
            .into_iter()
            .map(|(_, item, utility)| (item, utility))
            .collect(),
    ))
}
