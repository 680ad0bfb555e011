//! Pluggable chat-completion and embedding backends with retry, plus the
//! persisted record types and the content-addressed response cache.
//!
//! The wire protocol is the de-facto JSON chat-completion schema (messages
//! array, first choice's message content) and the matching embedding schema
//! (input string, first embedding array). Deterministic mock backends make
//! the whole pipeline testable offline.

pub mod cache;
pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};

use crate::config::{BackendKind, EmbeddingConfig, ModelConfig, RetryConfig};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    /// Abort-class: the whole run stops rather than burning retries.
    #[error("authentication failure: {0}")]
    Auth(String),
    /// Transient provider or transport failure; eligible for retry.
    #[error("retryable failure: {0}")]
    Retryable(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("retries exhausted after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
}

impl BackendError {
    /// Abort-class errors stop the run; everything else marks the record
    /// failed and the run continues.
    pub fn is_abort(&self) -> bool {
        matches!(self, BackendError::Auth(_))
    }
}

/// One LLM response tied to (model, variant, prompt hash).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub scenario_id: String,
    pub variant_key: String,
    pub model_name: String,
    pub prompt_hash: String,
    pub response_text: String,
    pub timestamp: u64,
    pub attempt_count: u32,
}

/// One response embedding, aligned to its generation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub scenario_id: String,
    pub variant_key: String,
    pub model_name: String,
    pub text_hash: String,
    pub embedding_model_name: String,
    pub vector: Vec<f64>,
}

/// A generation or scoring failure; failures are recorded, never silently
/// dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: String,
    pub scenario_id: String,
    pub variant_key: String,
    pub model_name: String,
    pub error: String,
}

pub trait ChatBackend: Send + Sync {
    /// One chat-completion attempt; retry lives outside the backend.
    fn complete(&self, prompt_text: &str, cfg: &ModelConfig) -> Result<String, BackendError>;
}

pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, text: &str, cfg: &EmbeddingConfig) -> Result<Vec<f64>, BackendError>;
}

/// Runs `attempt` under the retry policy with exponential backoff, doubling
/// the delay after each retryable failure. Returns the result together with
/// the number of attempts used. The sleeper is injected so tests can assert
/// the schedule without waiting.
pub fn with_retry<T>(
    policy: &RetryConfig,
    sleep: &mut dyn FnMut(std::time::Duration),
    attempt: &mut dyn FnMut() -> Result<T, BackendError>,
) -> Result<(T, u32), BackendError> {
    let mut backoff = std::time::Duration::from_millis(policy.backoff_ms);
    let mut count = 0u32;
    loop {
        count += 1;
        match attempt() {
            Ok(value) => return Ok((value, count)),
            Err(err) if matches!(err, BackendError::Retryable(_)) && count < policy.max_attempts => {
                sleep(backoff);
                backoff *= 2;
            }
            Err(BackendError::Retryable(last)) => {
                return Err(BackendError::Exhausted {
                    attempts: count,
                    last,
                })
            }
            Err(err) => return Err(err),
        }
    }
}

/// Builds a chat backend from config.
pub fn chat_backend(cfg: &ModelConfig) -> Box<dyn ChatBackend> {
    match cfg.kind {
        BackendKind::Mock => Box::new(mock::MockChatBackend::from_config(cfg)),
        BackendKind::Http => Box::new(http::HttpChatBackend),
    }
}

/// Builds an embedding backend from config.
pub fn embedding_backend(cfg: &EmbeddingConfig) -> Box<dyn EmbeddingBackend> {
    match cfg.kind {
        BackendKind::Mock => Box::new(mock::MockEmbeddingBackend),
        BackendKind::Http => Box::new(http::HttpEmbeddingBackend),
    }
}
