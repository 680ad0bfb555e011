//! Placeholder-template prompt rendering.
//!
//! A template is an external text asset with `{name}` placeholders and
//! explicit section delimiters:
//!
//! ```text
//! <<<section:hints>>>
//! Hints shown so far: {hints}
//! <<<end>>>
//! ```
//!
//! Each of the five ablatable components must sit inside exactly one section
//! named after its placeholder. When a component is removed, the whole
//! section (header and body) vanishes from the rendered prompt, leaving no
//! dangling header. List values render as JSON-style bracketed string lists.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ablation::{ContextComponent, ResolvedContext};

/// The placeholder names a template must contain exactly once each.
pub const REQUIRED_PLACEHOLDERS: [&str; 7] = [
    "current_problem",
    "correct_steps",
    "incorrect_steps",
    "hints",
    "next_step",
    "knowledge_components",
    "chat_history",
];

const SECTION_OPEN: &str = "<<<section:";
const SECTION_CLOSE: &str = ">>>";
const SECTION_END: &str = "<<<end>>>";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    /// Literal text, possibly with non-ablatable placeholders.
    Text(String),
    /// A droppable section owning one ablatable component.
    Section {
        component: ContextComponent,
        body: String,
    },
}

/// A parsed, validated prompt template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("missing placeholder {{{name}}}")]
    MissingPlaceholder { name: String },
    #[error("duplicate placeholder {{{name}}}")]
    DuplicatePlaceholder { name: String },
    #[error("malformed section markers: {detail}")]
    MalformedSection { detail: String },
    #[error("placeholder {{{name}}} must appear inside its <<<section:{name}>>> block")]
    PlaceholderOutsideSection { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("context is missing non-removed field {name:?}")]
    MissingField { name: String },
}

fn component_for_section(name: &str) -> Option<ContextComponent> {
    ContextComponent::ALL
        .into_iter()
        .find(|c| c.placeholder() == name)
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

impl PromptTemplate {
    /// Parses and validates template text. Every required placeholder must
    /// appear exactly once, and every ablatable placeholder must live inside
    /// its own droppable section.
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut segments: Vec<Segment> = Vec::new();
        let mut current_text = String::new();
        let mut open: Option<(ContextComponent, String)> = None;
        let mut seen_sections: Vec<ContextComponent> = Vec::new();

        let lines: Vec<&str> = text.split('\n').collect();
        let last = lines.len().saturating_sub(1);
        for (i, line) in lines.iter().enumerate() {
            let trimmed = line.trim();
            if trimmed.starts_with(SECTION_OPEN) {
                let name = trimmed
                    .strip_prefix(SECTION_OPEN)
                    .and_then(|rest| rest.strip_suffix(SECTION_CLOSE))
                    .ok_or_else(|| TemplateError::MalformedSection {
                        detail: format!("bad section header {trimmed:?}"),
                    })?;
                if open.is_some() {
                    return Err(TemplateError::MalformedSection {
                        detail: format!("nested section {name:?}"),
                    });
                }
                let component =
                    component_for_section(name).ok_or_else(|| TemplateError::MalformedSection {
                        detail: format!("unknown section name {name:?}"),
                    })?;
                if seen_sections.contains(&component) {
                    return Err(TemplateError::MalformedSection {
                        detail: format!("duplicate section {name:?}"),
                    });
                }
                seen_sections.push(component);
                if !current_text.is_empty() {
                    segments.push(Segment::Text(core::mem::take(&mut current_text)));
                }
                open = Some((component, String::new()));
            } else if trimmed == SECTION_END {
                let (component, body) =
                    open.take().ok_or_else(|| TemplateError::MalformedSection {
                        detail: "<<<end>>> without open section".to_string(),
                    })?;
                segments.push(Segment::Section { component, body });
            } else {
                let sink = match open.as_mut() {
                    Some((_, body)) => body,
                    None => &mut current_text,
                };
                sink.push_str(line);
                if i != last {
                    sink.push('\n');
                }
            }
        }
        if let Some((component, _)) = open {
            return Err(TemplateError::MalformedSection {
                detail: format!("unclosed section {:?}", component.placeholder()),
            });
        }
        if !current_text.is_empty() {
            segments.push(Segment::Text(current_text));
        }

        let template = PromptTemplate { segments };
        template.validate_placeholders()?;
        Ok(template)
    }

    fn validate_placeholders(&self) -> Result<(), TemplateError> {
        for name in REQUIRED_PLACEHOLDERS {
            let pattern = format!("{{{name}}}");
            let mut total = 0usize;
            let mut inside_own_section = 0usize;
            for segment in &self.segments {
                match segment {
                    Segment::Text(text) => total += count_occurrences(text, &pattern),
                    Segment::Section { component, body } => {
                        let count = count_occurrences(body, &pattern);
                        total += count;
                        if component.placeholder() == name {
                            inside_own_section += count;
                        }
                    }
                }
            }
            if total == 0 {
                return Err(TemplateError::MissingPlaceholder {
                    name: name.to_string(),
                });
            }
            if total > 1 {
                return Err(TemplateError::DuplicatePlaceholder {
                    name: name.to_string(),
                });
            }
            let ablatable = component_for_section(name).is_some();
            if ablatable && inside_own_section != 1 {
                return Err(TemplateError::PlaceholderOutsideSection {
                    name: name.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// A fully rendered prompt, content-addressed by its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub variant_key: String,
    pub scenario_id: String,
    pub prompt_hash: String,
}

/// Lowercase hex of the SHA-256 digest of `text`.
pub fn content_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        let hi = b"0123456789abcdef"[(byte >> 4) as usize];
        let lo = b"0123456789abcdef"[(byte & 0xf) as usize];
        out.push(hi as char);
        out.push(lo as char);
    }
    out
}

fn format_list(items: &[String]) -> String {
    // JSON-style quoted strings in square brackets, e.g. ["2x + 4 = 6"].
    let mut out = String::from("[");
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&serde_json::to_string(item).expect("string serialization cannot fail"));
    }
    out.push(']');
    out
}

fn substitute(
    text: &str,
    ctx: &ResolvedContext,
    chat_rendered: &str,
) -> Result<String, RenderError> {
    let mut out = text.to_string();
    let mut replace = |name: &str, value: Option<String>| -> Result<(), RenderError> {
        let pattern = format!("{{{name}}}");
        if out.contains(&pattern) {
            let value = value.ok_or_else(|| RenderError::MissingField {
                name: name.to_string(),
            })?;
            out = out.replace(&pattern, &value);
        }
        Ok(())
    };
    replace("current_problem", Some(ctx.current_problem.clone()))?;
    replace("chat_history", Some(chat_rendered.to_string()))?;
    replace(
        "correct_steps",
        ctx.correct_steps.as_deref().map(format_list),
    )?;
    replace(
        "incorrect_steps",
        ctx.incorrect_steps.as_deref().map(format_list),
    )?;
    replace("hints", ctx.hints.as_deref().map(format_list))?;
    replace("next_step", ctx.next_step.as_deref().map(format_list))?;
    replace(
        "knowledge_components",
        ctx.knowledge_components.as_deref().map(format_list),
    )?;
    Ok(out)
}

/// Renders a resolved context through the template. Removed components drop
/// their whole section; output is byte-deterministic.
pub fn render(template: &PromptTemplate, ctx: &ResolvedContext) -> Result<RenderedPrompt, RenderError> {
    let chat: Vec<String> = ctx
        .chat_history
        .iter()
        .map(|turn| format!("{}: {}", turn.speaker.label(), turn.text))
        .collect();
    let chat_rendered = format_list(&chat);

    let mut text = String::new();
    for segment in &template.segments {
        match segment {
            Segment::Text(body) => text.push_str(&substitute(body, ctx, &chat_rendered)?),
            Segment::Section { component, body } => {
                let present = match component {
                    ContextComponent::CorrectSteps => ctx.correct_steps.is_some(),
                    ContextComponent::IncorrectSteps => ctx.incorrect_steps.is_some(),
                    ContextComponent::NextStep => ctx.next_step.is_some(),
                    ContextComponent::KnowledgeComponents => ctx.knowledge_components.is_some(),
                    ContextComponent::Hints => ctx.hints.is_some(),
                };
                if present {
                    text.push_str(&substitute(body, ctx, &chat_rendered)?);
                }
            }
        }
    }

    let prompt_hash = content_hash(&text);
    Ok(RenderedPrompt {
        text,
        variant_key: ctx.variant_key.to_string(),
        scenario_id: ctx.scenario_id.clone(),
        prompt_hash,
    })
}
