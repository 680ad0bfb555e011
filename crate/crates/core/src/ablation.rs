//! Single-component context ablation: each scenario yields the original
//! context plus five variants, one per removed component, in canonical order.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scenario::{ChatTurn, Corpus, TutoringScenario};

/// The five ablatable context components, in canonical order.
///
/// Chat history is deliberately not a member: it is part of the context but
/// never removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextComponent {
    CorrectSteps,
    IncorrectSteps,
    NextStep,
    KnowledgeComponents,
    Hints,
}

impl ContextComponent {
    pub const ALL: [ContextComponent; 5] = [
        ContextComponent::CorrectSteps,
        ContextComponent::IncorrectSteps,
        ContextComponent::NextStep,
        ContextComponent::KnowledgeComponents,
        ContextComponent::Hints,
    ];

    /// The placeholder name this component occupies in a prompt template.
    pub fn placeholder(self) -> &'static str {
        match self {
            ContextComponent::CorrectSteps => "correct_steps",
            ContextComponent::IncorrectSteps => "incorrect_steps",
            ContextComponent::NextStep => "next_step",
            ContextComponent::KnowledgeComponents => "knowledge_components",
            ContextComponent::Hints => "hints",
        }
    }

    /// The persisted variant-key string for removing this component.
    /// These strings are part of the record schema and must never change.
    pub fn variant_key(self) -> &'static str {
        match self {
            ContextComponent::CorrectSteps => "no_correct",
            ContextComponent::IncorrectSteps => "no_incorrect",
            ContextComponent::NextStep => "no_next",
            ContextComponent::KnowledgeComponents => "no_kc",
            ContextComponent::Hints => "no_hints",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ContextComponent::CorrectSteps => "Correct steps",
            ContextComponent::IncorrectSteps => "Incorrect steps",
            ContextComponent::NextStep => "Next steps",
            ContextComponent::KnowledgeComponents => "Knowledge components",
            ContextComponent::Hints => "Hints",
        }
    }
}

/// A scenario with exactly zero or one context component removed. Carries no
/// copy of the removed data; resolution happens against the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioVariant {
    pub scenario_id: String,
    pub removed: Option<ContextComponent>,
}

pub const FULL_VARIANT_KEY: &str = "full";

/// All six variant keys in canonical order.
pub const VARIANT_KEYS: [&str; 6] = [
    FULL_VARIANT_KEY,
    "no_correct",
    "no_incorrect",
    "no_next",
    "no_kc",
    "no_hints",
];

impl ScenarioVariant {
    pub fn variant_key(&self) -> &'static str {
        match self.removed {
            None => FULL_VARIANT_KEY,
            Some(c) => c.variant_key(),
        }
    }
}

/// Produces the six variants for a scenario: the original first, then one
/// variant per component in canonical order. Removal of an already-empty
/// component is legal and yields a variant distinct in key only.
pub fn generate_variants(s: &TutoringScenario) -> Vec<ScenarioVariant> {
    let mut variants = Vec::with_capacity(6);
    variants.push(ScenarioVariant {
        scenario_id: s.scenario_id.clone(),
        removed: None,
    });
    for component in ContextComponent::ALL {
        variants.push(ScenarioVariant {
            scenario_id: s.scenario_id.clone(),
            removed: Some(component),
        });
    }
    variants
}

/// A scenario with the removed component blanked out. `None` fields mean
/// "removed by ablation": the prompt renderer drops the whole section rather
/// than substituting a placeholder like "N/A", since a visible marker would
/// itself be a signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedContext {
    pub scenario_id: String,
    pub variant_key: &'static str,
    pub current_problem: String,
    pub correct_steps: Option<Vec<String>>,
    pub incorrect_steps: Option<Vec<String>>,
    pub hints: Option<Vec<String>>,
    pub next_step: Option<Vec<String>>,
    pub knowledge_components: Option<Vec<String>>,
    pub chat_history: Vec<ChatTurn>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AblationError {
    #[error("unknown scenario_id {id:?}")]
    UnknownScenario { id: String },
}

/// Resolves a variant against its corpus, blanking the removed component.
pub fn effective_context(
    variant: &ScenarioVariant,
    corpus: &Corpus,
) -> Result<ResolvedContext, AblationError> {
    let scenario = corpus
        .get(&variant.scenario_id)
        .ok_or_else(|| AblationError::UnknownScenario {
            id: variant.scenario_id.clone(),
        })?;

    let keep = |c: ContextComponent, data: &Vec<String>| -> Option<Vec<String>> {
        if variant.removed == Some(c) {
            None
        } else {
            Some(data.clone())
        }
    };

    Ok(ResolvedContext {
        scenario_id: scenario.scenario_id.clone(),
        variant_key: variant.variant_key(),
        current_problem: scenario.current_problem.clone(),
        correct_steps: keep(ContextComponent::CorrectSteps, &scenario.correct_steps),
        incorrect_steps: keep(ContextComponent::IncorrectSteps, &scenario.incorrect_steps),
        hints: keep(ContextComponent::Hints, &scenario.hints),
        next_step: keep(ContextComponent::NextStep, &scenario.next_step_suggestion),
        knowledge_components: keep(
            ContextComponent::KnowledgeComponents,
            &scenario.knowledge_components,
        ),
        chat_history: scenario.chat_history.clone(),
    })
}
