//! Shared fixtures for unit tests.

use alloc::string::ToString;
use alloc::vec;

use crate::scenario::{ChatTurn, Speaker, TutoringScenario};

pub fn sample_scenario(id: &str) -> TutoringScenario {
    TutoringScenario {
        scenario_id: id.to_string(),
        current_problem: "3(2x + 4) - 2 = 16".to_string(),
        correct_steps: vec!["3(2x + 4) = 18".to_string(), "2x + 4 = 6".to_string()],
        incorrect_steps: vec!["2x = 6".to_string()],
        hints: vec!["How can you get rid of 4 on the left?".to_string()],
        next_step_suggestion: vec!["2x = 2".to_string()],
        knowledge_components: vec!["subtract-const".to_string()],
        chat_history: vec![ChatTurn {
            speaker: Speaker::Student,
            text: "can you help explain why this is incorrect?".to_string(),
        }],
    }
}
