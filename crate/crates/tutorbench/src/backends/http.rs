//! HTTP backends speaking the de-facto JSON chat-completion and embedding
//! schemas. API keys come from the environment variable named in config.

use serde_json::{json, Value};

use super::{BackendError, ChatBackend, EmbeddingBackend};
use crate::config::{EmbeddingConfig, ModelConfig};

fn classify(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::StatusCode(code) if code == 401 || code == 403 => {
            BackendError::Auth(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
            BackendError::Retryable(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) => BackendError::Malformed(format!("HTTP {code}")),
        ureq::Error::Io(e) => BackendError::Retryable(format!("io: {e}")),
        ureq::Error::Timeout(t) => BackendError::Retryable(format!("timeout: {t}")),
        other => BackendError::Malformed(other.to_string()),
    }
}

fn post_json(endpoint: &str, api_key_env: &str, body: Value) -> Result<Value, BackendError> {
    let mut request = ureq::post(endpoint);
    if !api_key_env.is_empty() {
        let key = std::env::var(api_key_env)
            .map_err(|_| BackendError::Auth(format!("env var {api_key_env} not set")))?;
        request = request.header("authorization", format!("Bearer {key}"));
    }
    let mut response = request.send_json(body).map_err(classify)?;
    response
        .body_mut()
        .read_json::<Value>()
        .map_err(|e| BackendError::Malformed(e.to_string()))
}

pub struct HttpChatBackend;

impl ChatBackend for HttpChatBackend {
    fn complete(&self, prompt_text: &str, cfg: &ModelConfig) -> Result<String, BackendError> {
        let body = json!({
            "model": cfg.name,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        });
        let reply = post_json(&cfg.endpoint, &cfg.api_key_env, body)?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::Malformed("missing choices[0].message.content".to_string())
            })
    }
}

pub struct HttpEmbeddingBackend;

impl EmbeddingBackend for HttpEmbeddingBackend {
    fn embed(&self, text: &str, cfg: &EmbeddingConfig) -> Result<Vec<f64>, BackendError> {
        let body = json!({
            "model": cfg.model_name,
            "input": text,
        });
        let reply = post_json(&cfg.endpoint, &cfg.api_key_env, body)?;
        let vector: Vec<f64> = reply["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| BackendError::Malformed("missing data[0].embedding".to_string()))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| BackendError::Malformed("non-numeric embedding entry".into()))
            })
            .collect::<Result<_, _>>()?;
        if vector.len() != cfg.dimension {
            return Err(BackendError::DimensionMismatch {
                expected: cfg.dimension,
                got: vector.len(),
            });
        }
        Ok(vector)
    }
}
