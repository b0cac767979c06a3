//! Run configuration: a single JSON document with one section per concern,
//! merged with command-line flags (flags win). The merged config is echoed
//! verbatim into every output directory next to a version stamp, so a run
//! can be reproduced from its artifacts alone.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub llm: LlmSection,
    pub policy: PolicySection,
    pub augment: AugmentSection,
    pub instructions: InstructionsSection,
    pub evaluate: EvaluateSection,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    pub format: Option<String>,
    pub k_core: Option<u32>,
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub model: Option<String>,
    pub dimension: usize,
    pub learning_rate: f64,
    pub l2_regularization: f64,
    pub epochs: usize,
    pub negatives_per_positive: usize,
    pub rng_seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = hybridrec::TrainConfig::default();
        TrainSection {
            model: None,
            dimension: d.dimension,
            learning_rate: d.learning_rate,
            l2_regularization: d.l2_regularization,
            epochs: d.epochs,
            negatives_per_positive: d.negatives_per_positive,
            rng_seed: d.rng_seed,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self) -> hybridrec::TrainConfig {
        hybridrec::TrainConfig {
            dimension: self.dimension,
            learning_rate: self.learning_rate,
            l2_regularization: self.l2_regularization,
            epochs: self.epochs,
            negatives_per_positive: self.negatives_per_positive,
            rng_seed: self.rng_seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSection {
    pub mock: bool,
    pub endpoint_url: Option<String>,
    pub model: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub max_tokens: u32,
}

impl Default for LlmSection {
    fn default() -> Self {
        let d = hybridrec::LLMClientConfig::default();
        LlmSection {
            mock: false,
            endpoint_url: None,
            model: d.model,
            timeout_ms: d.timeout_ms,
            max_in_flight: d.max_in_flight,
            max_retries: d.max_retries,
            max_tokens: d.max_tokens,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicySection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub c: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            alpha1: 0.5,
            alpha2: 0.3,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentSection {
    pub kind: Option<String>,
    pub pairs_per_user: usize,
    pub candidates_per_user: usize,
    pub targets: Option<Vec<String>>,
    pub seed: u64,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            kind: None,
            pairs_per_user: 2,
            candidates_per_user: 2,
            targets: None,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InstructionsSection {
    pub tasks: Vec<String>,
    pub per_task: usize,
    pub seed: u64,
}

impl Default for InstructionsSection {
    fn default() -> Self {
        InstructionsSection {
            tasks: vec!["listwise".into(), "pointwise".into(), "rating".into()],
            per_task: 5000,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateSection {
    pub task: Option<String>,
    pub model_path: Option<PathBuf>,
    pub k_prime: usize,
    pub cutoffs: Vec<usize>,
    pub history_limit: usize,
    pub alpha_override: Option<f64>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        let d = hybridrec::EvalOptions::default();
        EvaluateSection {
            task: None,
            model_path: None,
            k_prime: d.k_prime,
            cutoffs: d.cutoffs,
            history_limit: d.history_limit,
            alpha_override: None,
        }
    }
}

impl EvaluateSection {
    pub fn to_eval_options(&self) -> hybridrec::EvalOptions {
        hybridrec::EvalOptions {
            k_prime: self.k_prime,
            cutoffs: self.cutoffs.clone(),
            history_limit: self.history_limit,
            alpha_override: self.alpha_override,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("config {} is not valid JSON", path.display()))
            }
        }
    }
}

/// Apply `flag` over the config field when the flag was given.
pub fn override_with<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(value) = flag {
        *slot = value.clone();
    }
}

/// Like [`override_with`] for optional config fields.
pub fn override_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        *slot = flag.clone();
    }
}

/// Echo the effective config and a version stamp into the output directory.
pub fn write_run_config(out: &Path, command: &str, config: &RunConfig) -> Result<()> {
    let stamped = serde_json::json!({
        "tool": "hybridrec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    });
    let text = serde_json::to_string_pretty(&stamped).expect("config serializes");
    fs::write(out.join("run_config.json"), text + "\n")?;
    Ok(())
}

pub fn parse_comma_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_cutoffs(list: &str) -> Result<Vec<usize>> {
    parse_comma_list(list)
        .iter()
        .map(|s| {
            s.parse::<usize>()
                .with_context(|| format!("bad cutoff {s:?}"))
        })
        .collect()
}
