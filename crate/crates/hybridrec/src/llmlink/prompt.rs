//! Prompt rendering: labeled sections in a fixed order, with optional
//! augmentation blocks injected from a similar user's history and from the
//! conventional model's prediction.
//!
//! Rendering is a pure function of the context; the same context always
//! produces identical bytes.

use super::{format_rating, LlmError, PromptTask};

/// How many most-recent entries of a similar user's history survive
/// truncation when none is specified.
pub const SIMILAR_HISTORY_LIMIT: usize = 10;

/// One history line: a display title, optionally with the observed rating.
#[derive(Debug, Clone, PartialEq)]
pub struct TitledEntry {
    pub title: String,
    pub rating: Option<f64>,
}

impl TitledEntry {
    pub fn new(title: impl Into<String>) -> Self {
        TitledEntry {
            title: title.into(),
            rating: None,
        }
    }

    pub fn rated(title: impl Into<String>, rating: f64) -> Self {
        TitledEntry {
            title: title.into(),
            rating: Some(rating),
        }
    }

    fn render(&self) -> String {
        match self.rating {
            Some(r) => format!("{}: {}", self.title, format_rating(r)),
            None => self.title.clone(),
        }
    }
}

/// Everything a prompt is rendered from. History is expected in timestamp
/// order, oldest first; titles resolve through the catalog before they get
/// here.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PromptContext {
    pub instruction: String,
    pub history: Vec<TitledEntry>,
    pub candidates: Vec<String>,
    pub similar_user_history: Option<Vec<TitledEntry>>,
    pub conventional_prediction: Option<String>,
}

impl PromptContext {
    /// A context preloaded with the task's stock instruction.
    pub fn for_task(task: PromptTask) -> Self {
        PromptContext {
            instruction: default_instruction(task).to_string(),
            ..PromptContext::default()
        }
    }

    pub fn with_history(mut self, history: Vec<TitledEntry>) -> Self {
        self.history = history;
        self
    }

    pub fn with_candidates(mut self, candidates: Vec<String>) -> Self {
        self.candidates = candidates;
        self
    }
}

/// The stock instruction line for each task.
pub fn default_instruction(task: PromptTask) -> &'static str {
    match task {
        PromptTask::ListwiseRank => {
            "Rank the candidate movies based on user historical interactions and make the top k recommendations."
        }
        PromptTask::PointwiseRate => {
            "Predict the rating of a candidate movie based on the user's historical movie ratings."
        }
        PromptTask::RatingPredict => {
            "Predict the rating of a target movie based on the user's historical movie ratings."
        }
        PromptTask::PairRank => {
            "Choose the candidate movie the user would prefer based on user historical interactions."
        }
        PromptTask::NextItemPick => {
            "Select the candidate movie the user is most likely to watch next based on user historical interactions."
        }
        PromptTask::AttributeElicit => {
            "Provide the requested attributes of the candidate item, one 'Name: value' line per attribute."
        }
    }
}

/// Attach a similar user's history to the context, truncated to its most
/// recent [`SIMILAR_HISTORY_LIMIT`] entries. Setting the same history twice
/// is a no-op the second time.
pub fn augment_with_similar_user(
    mut ctx: PromptContext,
    history: &[TitledEntry],
) -> Result<PromptContext, LlmError> {
    if history.is_empty() {
        return Err(LlmError::EmptyHistory);
    }
    let start = history.len().saturating_sub(SIMILAR_HISTORY_LIMIT);
    ctx.similar_user_history = Some(history[start..].to_vec());
    Ok(ctx)
}

/// Attach the conventional model's prediction, rendered as text by the
/// caller (a rating like `3.2`, or a `"; "`-joined ranked list).
pub fn augment_with_model_prediction(
    mut ctx: PromptContext,
    prediction: &str,
) -> Result<PromptContext, LlmError> {
    if prediction.is_empty() {
        return Err(LlmError::EmptyPrediction);
    }
    ctx.conventional_prediction = Some(prediction.to_string());
    Ok(ctx)
}

fn join_entries(entries: &[TitledEntry]) -> String {
    entries
        .iter()
        .map(TitledEntry::render)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Render the labeled sections in their fixed order: Instruction, the
/// history, the candidate item(s), then the optional augmentation blocks,
/// ending with the `Output:` cue the completion continues from. Sections
/// without content are omitted entirely.
pub fn build_prompt(task: PromptTask, ctx: &PromptContext) -> Result<String, LlmError> {
    let missing = |field: &'static str| LlmError::MissingField { task, field };

    if ctx.instruction.is_empty() {
        return Err(missing("instruction"));
    }
    if task != PromptTask::AttributeElicit && ctx.history.is_empty() {
        return Err(missing("history"));
    }
    match task {
        PromptTask::ListwiseRank | PromptTask::NextItemPick => {
            if ctx.candidates.is_empty() {
                return Err(missing("candidates"));
            }
        }
        PromptTask::PairRank => {
            if ctx.candidates.len() != 2 {
                return Err(missing("candidate pair"));
            }
        }
        PromptTask::RatingPredict | PromptTask::PointwiseRate | PromptTask::AttributeElicit => {
            if ctx.candidates.len() != 1 {
                return Err(missing("single candidate"));
            }
        }
    }

    let rating_style = task.is_rating_style();
    let (history_label, similar_label, candidate_label) = if rating_style {
        (
            "Rating History",
            "Similar User Rating History",
            "Candidate Item",
        )
    } else {
        (
            "Interaction History",
            "Similar User Interaction History",
            if ctx.candidates.len() == 1 {
                "Candidate Item"
            } else {
                "Candidate Items"
            },
        )
    };

    let mut lines = Vec::with_capacity(6);
    lines.push(format!("Instruction: {}", ctx.instruction));
    if !ctx.history.is_empty() {
        lines.push(format!("{history_label}: {}", join_entries(&ctx.history)));
    }
    lines.push(format!("{candidate_label}: {}", ctx.candidates.join("; ")));
    if let Some(similar) = &ctx.similar_user_history {
        lines.push(format!("{similar_label}: {}", join_entries(similar)));
    }
    if let Some(prediction) = &ctx.conventional_prediction {
        lines.push(format!("Conventional Model Prediction: {prediction}"));
    }
    lines.push("Output:".to_string());
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn listwise_ctx() -> PromptContext {
        PromptContext::for_task(PromptTask::ListwiseRank)
            .with_history(vec![
                TitledEntry::new("Beyond Rangoon (1995)"),
                TitledEntry::new("Alien (1979)"),
            ])
            .with_candidates(vec![
                "Last Dance (1996)".into(),
                "Remains of the Day, The (1993)".into(),
            ])
    }

    #[test]
    fn listwise_prompt_with_both_augmentation_blocks() {
        let ctx = augment_with_similar_user(
            listwise_ctx(),
            &[TitledEntry::new("L.A. Confidential (1997)")],
        )
        .unwrap();
        let ctx =
            augment_with_model_prediction(ctx, "Remains of the Day, The (1993); Last Dance (1996)")
                .unwrap();
        let text = build_prompt(PromptTask::ListwiseRank, &ctx).unwrap();
        assert!(text.contains("Similar User Interaction History: L.A. Confidential (1997)"));
        assert!(text.contains(
            "Conventional Model Prediction: Remains of the Day, The (1993); Last Dance (1996)"
        ));
        assert!(text.starts_with("Instruction: Rank the candidate movies"));
        assert!(text.contains("Interaction History: Beyond Rangoon (1995); Alien (1979)"));
        assert!(text.ends_with("Output:"));
    }

    #[test]
    fn unaugmented_prompt_omits_optional_sections() {
        let text = build_prompt(PromptTask::ListwiseRank, &listwise_ctx()).unwrap();
        assert!(!text.contains("Similar User"));
        assert!(!text.contains("Conventional Model Prediction"));
    }

    #[test]
    fn empty_history_is_missing_field() {
        let ctx =
            PromptContext::for_task(PromptTask::ListwiseRank).with_candidates(vec!["X".into()]);
        assert!(matches!(
            build_prompt(PromptTask::ListwiseRank, &ctx),
            Err(LlmError::MissingField {
                field: "history",
                ..
            })
        ));
    }

    #[test]
    fn rating_prompt_uses_rating_labels_and_fig_style_line() {
        let ctx = PromptContext::for_task(PromptTask::RatingPredict)
            .with_history(vec![
                TitledEntry::rated("Independence Day (1996)", 3.0),
                TitledEntry::rated("Face/Off (1997)", 4.0),
            ])
            .with_candidates(vec!["Pink Floyd - The Wall (1982)".into()]);
        let ctx = augment_with_model_prediction(ctx, "3.2").unwrap();
        let text = build_prompt(PromptTask::RatingPredict, &ctx).unwrap();
        assert!(text.contains("Rating History: Independence Day (1996): 3; Face/Off (1997): 4"));
        assert!(text.contains("Candidate Item: Pink Floyd - The Wall (1982)"));
        assert!(text.contains("Conventional Model Prediction: 3.2"));
    }

    #[test]
    fn similar_user_truncates_to_most_recent_ten() {
        let history: Vec<TitledEntry> = (0..25)
            .map(|i| TitledEntry::new(format!("Movie {i:02}")))
            .collect();
        let ctx = augment_with_similar_user(listwise_ctx(), &history).unwrap();
        let kept = ctx.similar_user_history.as_ref().unwrap();
        assert_eq!(kept.len(), SIMILAR_HISTORY_LIMIT);
        assert_eq!(kept[0].title, "Movie 15");
        assert_eq!(kept[9].title, "Movie 24");
    }

    #[test]
    fn similar_user_augmentation_is_idempotent() {
        let history = vec![TitledEntry::new("A"), TitledEntry::new("B")];
        let once = augment_with_similar_user(listwise_ctx(), &history).unwrap();
        let twice = augment_with_similar_user(once.clone(), &history).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_similar_history_and_prediction_are_errors() {
        assert!(matches!(
            augment_with_similar_user(listwise_ctx(), &[]),
            Err(LlmError::EmptyHistory)
        ));
        assert!(matches!(
            augment_with_model_prediction(listwise_ctx(), ""),
            Err(LlmError::EmptyPrediction)
        ));
    }

    #[test]
    fn pair_rank_requires_exactly_two_candidates() {
        let ctx = PromptContext::for_task(PromptTask::PairRank)
            .with_history(vec![TitledEntry::new("A")])
            .with_candidates(vec!["B".into()]);
        assert!(build_prompt(PromptTask::PairRank, &ctx).is_err());
    }

    #[test]
    fn rendering_is_pure() {
        let ctx = listwise_ctx();
        assert_eq!(
            build_prompt(PromptTask::ListwiseRank, &ctx).unwrap(),
            build_prompt(PromptTask::ListwiseRank, &ctx).unwrap()
        );
    }
}
