//! Response parsing and instruction-following checks: intention inclusion,
//! delimiter existence, and exactly-three-recommendations, plus the data
//! model for the external pedagogical-soundness scorer and the per-model
//! quality aggregation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::stats::{wilson_interval, ProportionEstimate};

/// One parsed recommendation: an optional bracketed intention clause and the
/// remaining body text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub intention: Option<String>,
    pub body: String,
}

/// A response split on the '#' delimiter. `recommendations` is non-empty only
/// when the delimiter is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub raw_text: String,
    pub has_delimiter: bool,
    pub recommendations: Vec<Recommendation>,
}

/// The three instruction-following checks. The count check is contingent on
/// the delimiter check: `count_pass` implies `delimiter_pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatCheckResult {
    pub intention_pass: bool,
    pub delimiter_pass: bool,
    pub count_pass: bool,
}

/// Binary ratings from the external soundness scorer. Missing ratings mean
/// the scorer failed or the rating was not applicable; they are never
/// fabricated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessScore {
    pub praise_rating: Option<u8>,
    pub error_response_rating: Option<u8>,
    pub scorer_id: String,
}

const MAX_INTENTION_LEN: usize = 80;

/// Finds the first well-formed bracketed intention clause: `[` + 1..=80
/// non-`]` characters containing at least one letter + `]`. The letter
/// requirement keeps equation fragments like `[2x]` from counting.
fn find_intention(text: &str) -> Option<(usize, usize, &str)> {
    let bytes = text.as_bytes();
    let mut start = None;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' => start = Some(i),
            b']' => {
                if let Some(s) = start.take() {
                    let inner = &text[s + 1..i];
                    let ok = !inner.is_empty()
                        && inner.chars().count() <= MAX_INTENTION_LEN
                        && inner.chars().any(|c| c.is_alphabetic());
                    if ok {
                        return Some((s, i + 1, inner));
                    }
                }
            }
            _ => {}
        }
    }
    None
}

/// Whether the text contains at least one well-formed intention clause.
pub fn has_intention_clause(text: &str) -> bool {
    find_intention(text).is_some()
}

/// Splits a response on '#', trims whitespace, and drops empty segments, so a
/// trailing delimiter produces no empty recommendation. Parsing is total.
pub fn parse_response(text: &str) -> ParsedResponse {
    let has_delimiter = text.contains('#');
    let mut recommendations = Vec::new();
    if has_delimiter {
        for segment in text.split('#') {
            let segment = segment.trim();
            if segment.is_empty() {
                continue;
            }
            let (intention, body) = match find_intention(segment) {
                Some((start, end, inner)) => {
                    let mut rest = String::new();
                    rest.push_str(&segment[..start]);
                    rest.push_str(&segment[end..]);
                    let rest = rest.trim().to_string();
                    if rest.is_empty() {
                        // intention-only segment: keep it as the body instead
                        (None, segment.to_string())
                    } else {
                        (Some(inner.to_string()), rest)
                    }
                }
                None => (None, segment.to_string()),
            };
            recommendations.push(Recommendation { intention, body });
        }
    }
    ParsedResponse {
        raw_text: text.to_string(),
        has_delimiter,
        recommendations,
    }
}

/// Rejoins recommendations with " # ", re-attaching intention clauses. Used
/// by the round-trip stability property.
pub fn rejoin(recommendations: &[Recommendation]) -> String {
    let mut out = String::new();
    for (i, rec) in recommendations.iter().enumerate() {
        if i > 0 {
            out.push_str(" # ");
        }
        if let Some(intention) = &rec.intention {
            out.push('[');
            out.push_str(intention);
            out.push_str("] ");
        }
        out.push_str(&rec.body);
    }
    out
}

/// Evaluates the three instruction-following checks on a parsed response.
/// The intention check is response-level: one well-formed bracketed clause
/// anywhere in the raw text passes.
pub fn check_format(parsed: &ParsedResponse) -> FormatCheckResult {
    let delimiter_pass = parsed.has_delimiter;
    FormatCheckResult {
        intention_pass: has_intention_clause(&parsed.raw_text),
        delimiter_pass,
        count_pass: delimiter_pass && parsed.recommendations.len() == 3,
    }
}

/// The five quality metrics, in the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityMetric {
    ErrorResponse,
    Praise,
    Intention,
    Delimiter,
    Count,
}

impl QualityMetric {
    pub const ALL: [QualityMetric; 5] = [
        QualityMetric::ErrorResponse,
        QualityMetric::Praise,
        QualityMetric::Intention,
        QualityMetric::Delimiter,
        QualityMetric::Count,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            QualityMetric::ErrorResponse => "Resp. to error rating",
            QualityMetric::Praise => "Praise rating",
            QualityMetric::Intention => "Intention inclusion",
            QualityMetric::Delimiter => "Delimiter existence",
            QualityMetric::Count => "Recomm. count",
        }
    }
}

/// One response's contribution to the quality table. The applicability flags
/// come from the scenario: praise is rated only when the snapshot has correct
/// steps, error response only when it has incorrect steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseQualityInput {
    pub format: FormatCheckResult,
    pub soundness: Option<SoundnessScore>,
    pub has_correct_steps: bool,
    pub has_incorrect_steps: bool,
}

/// One row of the quality table. `estimate` is `None` when the applicable
/// denominator is zero (row not computable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub metric: QualityMetric,
    pub successes: usize,
    pub n: usize,
    pub estimate: Option<ProportionEstimate>,
}

/// Aggregates per-response results into the five quality rows. Each metric
/// uses its own applicable denominator; format checks apply to every record.
pub fn aggregate_quality(inputs: &[ResponseQualityInput], confidence: f64) -> Vec<QualityRow> {
    let mut rows = Vec::with_capacity(5);
    for metric in QualityMetric::ALL {
        let mut successes = 0usize;
        let mut n = 0usize;
        for input in inputs {
            let outcome: Option<bool> = match metric {
                QualityMetric::Intention => Some(input.format.intention_pass),
                QualityMetric::Delimiter => Some(input.format.delimiter_pass),
                QualityMetric::Count => Some(input.format.count_pass),
                QualityMetric::Praise => {
                    if input.has_correct_steps {
                        input
                            .soundness
                            .as_ref()
                            .and_then(|s| s.praise_rating)
                            .map(|r| r == 1)
                    } else {
                        None
                    }
                }
                QualityMetric::ErrorResponse => {
                    if input.has_incorrect_steps {
                        input
                            .soundness
                            .as_ref()
                            .and_then(|s| s.error_response_rating)
                            .map(|r| r == 1)
                    } else {
                        None
                    }
                }
            };
            if let Some(pass) = outcome {
                n += 1;
                if pass {
                    successes += 1;
                }
            }
        }
        let estimate = if n == 0 {
            None
        } else {
            Some(wilson_interval(successes, n, confidence).expect("valid proportion inputs"))
        };
        rows.push(QualityRow {
            metric,
            successes,
            n,
            estimate,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const EXAMPLE_2: &str = "[Ask to self-explain] Tell me what you're thinking about this \
problem. What do you think we should do to solve for x?";
    const EXAMPLE_3: &str = "I appreciate your effort so far! Tell me what you think you should \
do next with the equation 3x-1=8. # Talk about it some more # Great job on simplifying the left \
side of the equation! #";

    #[test]
    fn example_three_parses_to_three_recommendations() {
        let parsed = parse_response(EXAMPLE_3);
        assert!(parsed.has_delimiter);
        assert_eq!(parsed.recommendations.len(), 3);
        assert!(parsed.recommendations.iter().all(|r| r.intention.is_none()));
    }

    #[test]
    fn example_two_has_no_delimiter() {
        let parsed = parse_response(EXAMPLE_2);
        assert!(!parsed.has_delimiter);
        assert!(parsed.recommendations.is_empty());
    }

    #[test]
    fn empty_input_parses_empty() {
        let parsed = parse_response("");
        assert!(!parsed.has_delimiter);
        assert!(parsed.recommendations.is_empty());
    }

    #[test]
    fn example_checks_match_expectations() {
        let three = check_format(&parse_response(EXAMPLE_3));
        assert!(!three.intention_pass);
        assert!(three.delimiter_pass);
        assert!(three.count_pass);

        let two = check_format(&parse_response(EXAMPLE_2));
        assert!(two.intention_pass);
        assert!(!two.delimiter_pass);
        assert!(!two.count_pass);
    }

    #[test]
    fn four_segments_fail_count() {
        let result = check_format(&parse_response("a # b # c # d"));
        assert!(result.delimiter_pass);
        assert!(!result.count_pass);
    }

    #[test]
    fn intention_grammar_excludes_math_brackets() {
        assert!(!has_intention_clause("solve [2]x = 4"));
        assert!(!has_intention_clause("matrix [12 34] here"));
        assert!(has_intention_clause("[Encourage] keep going"));
        assert!(has_intention_clause("try this [Ask to self-explain] now"));
        assert!(!has_intention_clause("unclosed [Encourage"));
        assert!(!has_intention_clause("empty [] brackets"));
    }

    #[test]
    fn intention_extraction_per_segment() {
        let parsed = parse_response("[Encourage] nice work # [Guide] try dividing # keep at it");
        assert_eq!(
            parsed.recommendations[0].intention.as_deref(),
            Some("Encourage")
        );
        assert_eq!(parsed.recommendations[0].body, "nice work");
        assert_eq!(parsed.recommendations[2].intention, None);
    }

    #[test]
    fn rejoin_round_trip() {
        let parsed = parse_response("[Encourage] nice # plain text # foo [Guide] bar");
        let rejoined = rejoin(&parsed.recommendations);
        let reparsed = parse_response(&rejoined);
        assert_eq!(parsed.recommendations, reparsed.recommendations);
    }

    #[test]
    fn aggregation_uses_applicable_denominators() {
        let pass_all = FormatCheckResult {
            intention_pass: true,
            delimiter_pass: true,
            count_pass: true,
        };
        let score = |praise, error| SoundnessScore {
            praise_rating: praise,
            error_response_rating: error,
            scorer_id: "mock".into(),
        };
        let inputs = vec![
            ResponseQualityInput {
                format: pass_all,
                soundness: Some(score(Some(1), Some(1))),
                has_correct_steps: true,
                has_incorrect_steps: true,
            },
            ResponseQualityInput {
                format: pass_all,
                soundness: Some(score(Some(0), None)),
                has_correct_steps: true,
                has_incorrect_steps: false,
            },
            ResponseQualityInput {
                format: pass_all,
                soundness: None,
                has_correct_steps: true,
                has_incorrect_steps: true,
            },
        ];
        let rows = aggregate_quality(&inputs, 0.95);
        assert_eq!(rows.len(), 5);
        let by_metric = |m: QualityMetric| rows.iter().find(|r| r.metric == m).unwrap().clone();
        assert_eq!(by_metric(QualityMetric::Intention).n, 3);
        // praise applicable in all three, but one scorer failure drops out
        assert_eq!(by_metric(QualityMetric::Praise).n, 2);
        assert_eq!(by_metric(QualityMetric::Praise).successes, 1);
        // errors in-window for two records, one scored
        assert_eq!(by_metric(QualityMetric::ErrorResponse).n, 1);
        assert_eq!(by_metric(QualityMetric::ErrorResponse).successes, 1);
    }

    #[test]
    fn empty_bucket_rows_not_computable() {
        let rows = aggregate_quality(&[], 0.95);
        assert!(rows.iter().all(|r| r.estimate.is_none() && r.n == 0));
    }
}
