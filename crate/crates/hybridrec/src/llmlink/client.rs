//! Completion clients: the [`TextCompletion`] trait, an HTTP client for
//! OpenAI-style completion endpoints with retry and bounded concurrency,
//! and the configuration both share.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{LLMResponse, LlmError, Prompt};

/// Environment variable holding the completion endpoint URL.
pub const ENV_LLM_URL: &str = "HYBRIDREC_LLM_URL";
/// Environment variable holding the bearer token.
pub const ENV_LLM_KEY: &str = "HYBRIDREC_LLM_KEY";

/// Remote client settings. Temperature is pinned to 0 (greedy decoding) so
/// completions are reproducible; the constructor refuses anything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LLMClientConfig {
    pub endpoint_url: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retry_backoff_ms: u64,
}

impl Default for LLMClientConfig {
    fn default() -> Self {
        LLMClientConfig {
            endpoint_url: String::new(),
            model: "default".to_string(),
            timeout_ms: 30_000,
            max_in_flight: 4,
            max_retries: 2,
            temperature: 0.0,
            max_tokens: 512,
            retry_backoff_ms: 200,
        }
    }
}

impl LLMClientConfig {
    pub fn new(endpoint_url: impl Into<String>, model: impl Into<String>) -> Self {
        LLMClientConfig {
            endpoint_url: endpoint_url.into(),
            model: model.into(),
            ..LLMClientConfig::default()
        }
    }
}

/// Anything that can turn a prompt into a completion: the remote endpoint,
/// the mock oracle, or a test stub.
pub trait TextCompletion: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<LLMResponse, LlmError>;

    /// Complete a batch. Results come back in request order regardless of
    /// completion order; implementations may run requests concurrently.
    fn complete_batch(&self, prompts: &[Prompt]) -> Vec<Result<LLMResponse, LlmError>> {
        prompts.iter().map(|p| self.complete(p)).collect()
    }

    /// Short label for config fingerprints.
    fn label(&self) -> String {
        "client".to_string()
    }
}

/// Blocking HTTP client for a JSON completion endpoint. Requests POST
/// `{model, prompt, temperature: 0, max_tokens}` and read the completion
/// from `choices[0].text`; transient failures retry with exponential
/// backoff up to `max_retries` extra attempts.
pub struct RemoteClient {
    config: LLMClientConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

impl RemoteClient {
    pub fn new(config: LLMClientConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        if config.temperature != 0.0 {
            return Err(LlmError::Unparseable {
                reason: format!("temperature is pinned to 0, got {}", config.temperature),
            });
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| LlmError::TransportError {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(RemoteClient {
            config,
            api_key,
            http,
        })
    }

    /// Build a client from `config`, with `HYBRIDREC_LLM_URL` and
    /// `HYBRIDREC_LLM_KEY` overriding the endpoint and supplying the token.
    pub fn from_env(mut config: LLMClientConfig) -> Result<Self, LlmError> {
        if let Ok(url) = std::env::var(ENV_LLM_URL) {
            if !url.is_empty() {
                config.endpoint_url = url;
            }
        }
        let key = std::env::var(ENV_LLM_KEY).ok().filter(|k| !k.is_empty());
        Self::new(config, key)
    }

    pub fn config(&self) -> &LLMClientConfig {
        &self.config
    }

    /// The exact JSON body a prompt is sent with.
    pub fn request_body(&self, prompt_text: &str) -> serde_json::Value {
        serde_json::json!({
            "model": self.config.model,
            "prompt": prompt_text,
            "temperature": 0.0,
            "max_tokens": self.config.max_tokens,
        })
    }

    fn attempt(&self, prompt_text: &str) -> Result<String, (bool, String)> {
        let mut request = self
            .http
            .post(&self.config.endpoint_url)
            .json(&self.request_body(prompt_text));
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| (e.is_timeout(), e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 {
            return Err((false, "rate limited".to_string()));
        }
        if !status.is_success() {
            return Err((false, format!("http status {status}")));
        }
        let body: serde_json::Value = response
            .json()
            .map_err(|e| (false, format!("invalid JSON body: {e}")))?;
        body.pointer("/choices/0/text")
            .and_then(|v| v.as_str())
            .map(|s| s.to_string())
            .ok_or_else(|| (false, "missing choices[0].text in response".to_string()))
    }
}

impl TextCompletion for RemoteClient {
    fn complete(&self, prompt: &Prompt) -> Result<LLMResponse, LlmError> {
        let started = Instant::now();
        let total_attempts = 1 + self.config.max_retries;
        let mut last_error = None;
        for attempt in 1..=total_attempts {
            match self.attempt(&prompt.text) {
                Ok(text) => {
                    return Ok(LLMResponse {
                        text,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts: attempt,
                    });
                }
                Err((timed_out, message)) => {
                    last_error = Some(if timed_out {
                        LlmError::Timeout { attempts: attempt }
                    } else if message == "rate limited" {
                        LlmError::RateLimited { attempts: attempt }
                    } else {
                        LlmError::TransportError {
                            attempts: attempt,
                            message,
                        }
                    });
                    if attempt < total_attempts {
                        let backoff = self.config.retry_backoff_ms << (attempt - 1).min(8);
                        std::thread::sleep(Duration::from_millis(backoff.min(5_000)));
                    }
                }
            }
        }
        Err(last_error.expect("at least one attempt"))
    }

    fn complete_batch(&self, prompts: &[Prompt]) -> Vec<Result<LLMResponse, LlmError>> {
        let width = self.config.max_in_flight.max(1);
        let mut results: Vec<Option<Result<LLMResponse, LlmError>>> =
            (0..prompts.len()).map(|_| None).collect();
        for (chunk_idx, chunk) in prompts.chunks(width).enumerate() {
            let base = chunk_idx * width;
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|prompt| scope.spawn(move || self.complete(prompt)))
                    .collect();
                for (offset, handle) in handles.into_iter().enumerate() {
                    results[base + offset] = Some(handle.join().expect("worker panicked"));
                }
            });
        }
        results.into_iter().map(|r| r.expect("filled")).collect()
    }

    fn label(&self) -> String {
        format!("remote:{}", self.config.model)
    }
}
