//! Tutoring-scenario data model: one 30-second snapshot of ITS state plus the
//! student-parent chat, and the corpus that fixes the pairing order used by
//! the statistical tests.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Student,
    Parent,
}

impl Speaker {
    pub fn label(self) -> &'static str {
        match self {
            Speaker::Student => "Student",
            Speaker::Parent => "Parent",
        }
    }
}

/// One utterance in the student-parent chat history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub speaker: Speaker,
    pub text: String,
}

/// One problem-solving context snapshot from the tutoring system.
///
/// Every list field is a required key in the corpus file: an empty list means
/// "no such events in this snapshot", while a missing key is a format error.
/// Equation steps are opaque strings; no algebra is parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TutoringScenario {
    pub scenario_id: String,
    pub current_problem: String,
    pub correct_steps: Vec<String>,
    pub incorrect_steps: Vec<String>,
    pub hints: Vec<String>,
    pub next_step_suggestion: Vec<String>,
    pub knowledge_components: Vec<String>,
    pub chat_history: Vec<ChatTurn>,
}

/// Checks a single scenario's invariants. Violations are data, not failures:
/// the report lists every problem found, and an empty report means valid.
pub fn validate_scenario(s: &TutoringScenario) -> Vec<String> {
    let mut violations = Vec::new();
    if s.scenario_id.trim().is_empty() {
        violations.push(String::from("scenario_id empty"));
    }
    if s.current_problem.trim().is_empty() {
        violations.push(String::from("current_problem empty"));
    }
    for (i, turn) in s.chat_history.iter().enumerate() {
        if turn.text.trim().is_empty() {
            violations.push(format!("chat_history[{i}].text empty"));
        }
    }
    violations
}

/// An ordered scenario collection. The order is the pairing index used to
/// align embedding rows across prompt variants, so it must be stable across
/// loads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub scenarios: Vec<TutoringScenario>,
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    Empty,
    #[error("duplicate scenario_id {id:?}")]
    DuplicateId { id: String },
    #[error("invalid scenario at index {index} ({id:?}): {violations:?}")]
    InvalidScenario {
        index: usize,
        id: String,
        violations: Vec<String>,
    },
}

impl Corpus {
    /// Builds a corpus, enforcing non-emptiness, per-scenario validity, and
    /// scenario-id uniqueness. Scenario order is preserved as given.
    pub fn new(scenarios: Vec<TutoringScenario>, source_path: String) -> Result<Self, CorpusError> {
        if scenarios.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut seen = BTreeSet::new();
        for (index, s) in scenarios.iter().enumerate() {
            let violations = validate_scenario(s);
            if !violations.is_empty() {
                return Err(CorpusError::InvalidScenario {
                    index,
                    id: s.scenario_id.clone(),
                    violations,
                });
            }
            if !seen.insert(s.scenario_id.clone()) {
                return Err(CorpusError::DuplicateId {
                    id: s.scenario_id.clone(),
                });
            }
        }
        Ok(Corpus {
            scenarios,
            source_path,
        })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn get(&self, scenario_id: &str) -> Option<&TutoringScenario> {
        self.scenarios.iter().find(|s| s.scenario_id == scenario_id)
    }
}
