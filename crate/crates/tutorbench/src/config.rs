//! Declarative run configuration (TOML): corpus, template, models, embedding
//! backend, statistical parameters, and scorer settings. API keys are never
//! stored in the file; the config names environment variables instead.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryConfig {
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        RetryConfig {
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub api_key_env: String,
    /// Decoding temperature; the provider default 1.0 unless overridden.
    /// Recorded in the run manifest so every run is self-describing.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub retry: RetryConfig,
    /// Mock-only: when set, the mock response depends on whether this marker
    /// substring appears in the prompt, making the model sensitive to exactly
    /// the context section carrying it.
    #[serde(default)]
    pub sensitive_marker: Option<String>,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_max_tokens() -> u32 {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub kind: BackendKind,
    #[serde(default = "default_embedding_model")]
    pub model_name: String,
    #[serde(default = "default_embedding_dim")]
    pub dimension: usize,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default)]
    pub retry: RetryConfig,
}

fn default_embedding_model() -> String {
    "text-embedding-3-large".to_string()
}

fn default_embedding_dim() -> usize {
    3072
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    None,
    Mock,
    Subprocess,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    /// Subprocess command line (program followed by arguments).
    #[serde(default)]
    pub command: Vec<String>,
    #[serde(default)]
    pub url: String,
    #[serde(default = "default_scorer_timeout")]
    pub timeout_ms: u64,
}

fn default_scorer_timeout() -> u64 {
    30_000
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            kind: ScorerKind::None,
            command: Vec::new(),
            url: String::new(),
            timeout_ms: default_scorer_timeout(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub corpus: PathBuf,
    pub template: PathBuf,
    #[serde(default)]
    pub run_dir: Option<PathBuf>,
    /// Bootstrap resample count for the randomization tests.
    pub resamples: usize,
    pub seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub embedding: EmbeddingConfig,
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub scorer: ScorerConfig,
}

fn default_parallelism() -> usize {
    1
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.resamples == 0 {
            return Err(ConfigError::Invalid("resamples must be >= 1".into()));
        }
        if self.models.is_empty() {
            return Err(ConfigError::Invalid("at least one model required".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be >= 1".into()));
        }
        for model in &self.models {
            if model.name.trim().is_empty() {
                return Err(ConfigError::Invalid("model name must be non-empty".into()));
            }
            if model.temperature < 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "model {}: temperature must be >= 0",
                    model.name
                )));
            }
            if model.retry.max_attempts < 1 {
                return Err(ConfigError::Invalid(format!(
                    "model {}: retry.max_attempts must be >= 1",
                    model.name
                )));
            }
            if model.kind == BackendKind::Http && model.endpoint.is_empty() {
                return Err(ConfigError::Invalid(format!(
                    "model {}: http backend needs an endpoint",
                    model.name
                )));
            }
        }
        if self.embedding.dimension == 0 {
            return Err(ConfigError::Invalid("embedding.dimension must be >= 1".into()));
        }
        let mut names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.models.len() {
            return Err(ConfigError::Invalid("duplicate model names".into()));
        }
        Ok(())
    }
}
