//! A hybrid recommendation toolkit.
//!
//! Conventional recommenders (pairwise-ranking MF, biased rating MF, a
//! first-order sequential model) train locally on interaction data. A
//! language model, reached through a pluggable completion client or a
//! deterministic mock oracle, reranks candidates and predicts ratings from
//! text prompts. The two prediction sources augment each other — the LLM
//! synthesizes training data for the conventional models, the conventional
//! models enrich the LLM's prompts — and their outputs fuse through a
//! long-tail-adaptive linear interpolation.
//!
//! The narrative guide lives in `book/`; its code snippets compile and run
//! as this crate's doc-tests.

pub mod aggregate;
pub mod augment;
pub mod corpus;
pub mod evalkit;
pub mod llmlink;
pub mod recmodels;
pub mod synthetic;

mod guide;

pub use aggregate::{
    adaptive_alpha, aggregate_rating, aggregate_rerank, llm_position_utilities,
    long_tail_coefficient, position_utilities, AggregationPolicy, LongTailStats,
};
pub use augment::{
    augment_attributes, augment_direct, augment_sequential, build_instruction_dataset,
    export_instructions, AugmentedSequence, BprTriple, InstructionRecord, SkipReport, TripleOrigin,
};
pub use corpus::{
    apply_k_core, corpus_stats, ingest, leave_one_out_split, Catalog, Corpus, CorpusError,
    CorpusStats, DatasetFormat, Interaction, ItemId, RawRecord, SplitCorpus, UserId,
};
pub use evalkit::{
    evaluate_rating, evaluate_topk, hr_at_k, mae, ndcg_at_k, rmse, EvalOptions, EvalTask,
    MetricReport,
};
pub use llmlink::{
    build_prompt, parse_attributes, parse_pair_preference, parse_ranked_list, parse_rating,
    LLMClientConfig, LLMResponse, LlmError, MockOracle, Prompt, PromptContext, PromptTask,
    RemoteClient, TextCompletion, TitledEntry,
};
pub use recmodels::{
    bpr_loss, cosine_similarity, most_similar_user, next_item_scores, predict_rating,
    train_markov_seq, train_mf_bpr, train_mf_bpr_with_triples, train_rating_mf, ItemScorer,
    MFModel, MarkovSequentialModel, ModelError, RankedList, RatingModel, TrainConfig,
    UserEmbeddings,
};
