//! The text protocol between the engine and a language model: prompt
//! construction, a completion client abstraction (remote endpoint or
//! deterministic mock), and parsers from raw completions back to typed
//! results.

mod client;
mod mock;
mod parse;
mod prompt;

pub use client::{LLMClientConfig, RemoteClient, TextCompletion, ENV_LLM_KEY, ENV_LLM_URL};
pub use mock::MockOracle;
pub use parse::{parse_attributes, parse_pair_preference, parse_ranked_list, parse_rating};
pub use prompt::{
    augment_with_model_prediction, augment_with_similar_user, build_prompt, default_instruction,
    PromptContext, TitledEntry, SIMILAR_HISTORY_LIMIT,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ItemId, UserId};

/// The recommendation tasks a prompt can pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTask {
    /// Order a candidate list in one completion.
    ListwiseRank,
    /// Rate a single candidate so callers can sort candidates themselves.
    PointwiseRate,
    /// Predict the rating of a target item.
    RatingPredict,
    /// Pick the preferred item of a pair.
    PairRank,
    /// Pick the next item from sampled candidates.
    NextItemPick,
    /// Elicit missing item attributes.
    AttributeElicit,
}

impl PromptTask {
    /// Tasks phrased over rating histories rather than plain interaction
    /// histories.
    pub fn is_rating_style(self) -> bool {
        matches!(self, PromptTask::RatingPredict | PromptTask::PointwiseRate)
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptTask::ListwiseRank => "listwise_rank",
            PromptTask::PointwiseRate => "pointwise_rate",
            PromptTask::RatingPredict => "rating_predict",
            PromptTask::PairRank => "pair_rank",
            PromptTask::NextItemPick => "next_item_pick",
            PromptTask::AttributeElicit => "attribute_elicit",
        }
    }
}

impl std::fmt::Display for PromptTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt for task {task} is missing required field {field}")]
    MissingField {
        task: PromptTask,
        field: &'static str,
    },
    #[error("history must be non-empty")]
    EmptyHistory,
    #[error("prediction text must be non-empty")]
    EmptyPrediction,
    #[error("unparseable response: {reason}")]
    Unparseable { reason: String },
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("transport error after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
}

/// A fully rendered prompt plus the structured facts it was rendered from.
/// The remote client sends only `text`; the mock oracle answers from the
/// metadata, which is what makes every downstream pipeline testable without
/// model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub task: PromptTask,
    pub text: String,
    pub user: Option<UserId>,
    /// Candidates in conventional order, paired with their display titles.
    pub candidates: Vec<(ItemId, String)>,
    /// Attribute names an [`PromptTask::AttributeElicit`] prompt asks for.
    pub expected_attributes: Vec<String>,
}

impl Prompt {
    /// Render `ctx` and attach the candidate ids (one per `ctx.candidates`
    /// title, same order).
    pub fn render(
        task: PromptTask,
        ctx: &PromptContext,
        user: Option<UserId>,
        candidate_ids: &[ItemId],
    ) -> Result<Self, LlmError> {
        if candidate_ids.len() != ctx.candidates.len() {
            return Err(LlmError::MissingField {
                task,
                field: "candidate ids",
            });
        }
        let text = build_prompt(task, ctx)?;
        Ok(Prompt {
            task,
            text,
            user,
            candidates: candidate_ids
                .iter()
                .copied()
                .zip(ctx.candidates.iter().cloned())
                .collect(),
            expected_attributes: Vec::new(),
        })
    }

    pub fn with_expected_attributes(mut self, keys: Vec<String>) -> Self {
        self.expected_attributes = keys;
        self
    }
}

/// One completion: the raw text exactly as returned, untrimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct LLMResponse {
    pub text: String,
    pub latency_ms: u64,
    pub attempts: u32,
}

/// Render a rating the way prompts and completions carry them: integers
/// print bare (`3`), everything else uses the shortest round-trip decimal
/// (`3.2`).
pub fn format_rating(r: f64) -> String {
    if r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rating_formatting() {
        assert_eq!(format_rating(3.0), "3");
        assert_eq!(format_rating(3.2), "3.2");
        assert_eq!(format_rating(-1.5), "-1.5");
        assert_eq!(format_rating(4.25), "4.25");
    }
}
