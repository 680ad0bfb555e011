//! Deterministic offline backends: pure functions of their inputs, so mock
//! runs are bit-reproducible across machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tutorbench_core::stats::stable_hash;

use super::{BackendError, ChatBackend, EmbeddingBackend};
use crate::config::{EmbeddingConfig, ModelConfig};

const INTENTIONS: [&str; 6] = [
    "Encourage child to continue",
    "Ask to self-explain",
    "Provide guidance",
    "Praise effort",
    "Correct student's mistake",
    "Check understanding",
];

const BODIES: [&str; 8] = [
    "What do you think the next step should be?",
    "Can you explain why you chose that step?",
    "Remember to do the same thing to both sides.",
    "You're making steady progress, keep going.",
    "Take another look at the constant term.",
    "Which skill does this step practice?",
    "Try isolating the variable first.",
    "Walk me through your reasoning so far.",
];

/// Response text derived entirely from the prompt hash, formatted to satisfy
/// the three-recommendation instruction.
fn standard_response(model_name: &str, prompt_hash: &str) -> String {
    let h = stable_hash(&format!("{model_name}|{prompt_hash}"));
    let mut parts = Vec::with_capacity(3);
    for slot in 0..3u64 {
        let intent = INTENTIONS[((h >> (8 * slot)) % INTENTIONS.len() as u64) as usize];
        let body = BODIES[((h >> (8 * slot + 4)) % BODIES.len() as u64) as usize];
        parts.push(format!("[{intent}] {body}"));
    }
    // hash fragment keeps distinct prompts from colliding to identical text
    format!(
        "{} # {} # {} (ref {})",
        parts[0],
        parts[1],
        parts[2],
        &prompt_hash[..12]
    )
}

/// Deterministic chat backend. With a sensitivity marker configured, the
/// response depends only on whether the marker substring appears in the
/// prompt, making the model adapt to exactly one context section.
pub struct MockChatBackend {
    sensitive_marker: Option<String>,
}

impl MockChatBackend {
    pub fn new(sensitive_marker: Option<String>) -> Self {
        MockChatBackend { sensitive_marker }
    }

    pub fn from_config(cfg: &ModelConfig) -> Self {
        MockChatBackend::new(cfg.sensitive_marker.clone())
    }
}

impl ChatBackend for MockChatBackend {
    fn complete(&self, prompt_text: &str, cfg: &ModelConfig) -> Result<String, BackendError> {
        if let Some(marker) = &self.sensitive_marker {
            let text = if prompt_text.contains(marker.as_str()) {
                "[Correct student's mistake] Look closely at the step that went wrong. # \
                 [Ask to self-explain] Why do you think that step felt right? # \
                 [Provide guidance] Compare it with your last correct step."
            } else {
                "[Encourage child to continue] You're doing well with this problem. # \
                 [Ask to self-explain] What do you want to try next? # \
                 [Check understanding] How confident are you about this step?"
            };
            return Ok(text.to_string());
        }
        let hash = tutorbench_core::prompt::content_hash(prompt_text);
        Ok(standard_response(&cfg.name, &hash))
    }
}

/// Deterministic embedding backend: a pseudo-random unit vector seeded by
/// (embedding model, text), so identical texts embed identically.
pub struct MockEmbeddingBackend;

impl EmbeddingBackend for MockEmbeddingBackend {
    fn embed(&self, text: &str, cfg: &EmbeddingConfig) -> Result<Vec<f64>, BackendError> {
        if text.is_empty() {
            return Err(BackendError::Malformed("empty text".into()));
        }
        let seed = stable_hash(&format!("{}|{}", cfg.model_name, text));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vector: Vec<f64> = (0..cfg.dimension)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut vector {
            *v /= norm;
        }
        Ok(vector)
    }
}
