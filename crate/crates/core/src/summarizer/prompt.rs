//! Plain-text prompt templates.
//!
//! A template file holds the system instruction, a `=== USER ===` separator
//! line, and the user message. The user message must contain
//! `{{previous_summary}}` and one `{{#turns}} ... {{/turns}}` block; the
//! block is repeated per folded turn and must contain `{{index}}`. Inside
//! the block `{{reasoning}}`, `{{action}}` and `{{observation}}` expand to
//! the turn's segment texts.

use super::{SummarizerError, SummaryInput};

pub const SUMMARY_TEMPLATE: &str = include_str!("../../assets/prompts/summary.txt");
pub const CRITIC_TEMPLATE: &str = include_str!("../../assets/prompts/critic_summary.txt");

const USER_SEPARATOR: &str = "=== USER ===";
const TURNS_OPEN: &str = "{{#turns}}";
const TURNS_CLOSE: &str = "{{/turns}}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system_text: String,
    user_head: String,
    turn_block: String,
    user_tail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptMessages {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, SummarizerError> {
        let err = |m: &str| SummarizerError::Template(m.to_string());
        let (system, user) = source
            .split_once(&format!("\n{USER_SEPARATOR}\n"))
            .ok_or_else(|| err("missing `=== USER ===` separator"))?;
        if !user.contains("{{previous_summary}}") {
            return Err(err("missing {{previous_summary}} slot"));
        }
        let (head, rest) = user.split_once(TURNS_OPEN).ok_or_else(|| err("missing {{#turns}} block"))?;
        let (block, tail) = rest.split_once(TURNS_CLOSE).ok_or_else(|| err("unterminated {{#turns}} block"))?;
        if !block.contains("{{index}}") {
            return Err(err("turn block is missing the {{index}} slot"));
        }
        if tail.contains("{{previous_summary}}") || block.contains("{{previous_summary}}") {
            return Err(err("{{previous_summary}} must precede the turn block"));
        }
        Ok(PromptTemplate {
            system_text: system.trim_end().to_string(),
            user_head: head.to_string(),
            turn_block: block.trim_start_matches('\n').to_string(),
            user_tail: tail.trim_start_matches('\n').to_string(),
        })
    }

    pub fn summary_default() -> Self {
        Self::parse(SUMMARY_TEMPLATE).expect("bundled summary template parses")
    }

    pub fn critic() -> Self {
        Self::parse(CRITIC_TEMPLATE).expect("bundled critic template parses")
    }
}

/// Renders the system and user messages for one summarization request.
/// Turn blocks carry absolute turn indices.
pub fn build_prompt(tpl: &PromptTemplate, input: &SummaryInput) -> Result<PromptMessages, SummarizerError> {
    input.validate()?;
    let mut user = tpl.user_head.replace("{{previous_summary}}", &input.previous_context.text);
    for turn in &input.turns {
        user.push_str(
            &tpl.turn_block
                .replace("{{index}}", &turn.index.to_string())
                .replace("{{reasoning}}", &turn.reasoning.text)
                .replace("{{action}}", &turn.action.text)
                .replace("{{observation}}", &turn.observation.text),
        );
    }
    user.push_str(&tpl.user_tail);
    Ok(PromptMessages { system: tpl.system_text.clone(), user })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Segment, Turn};

    fn input(first: usize, n: usize, prev: &str) -> SummaryInput {
        SummaryInput {
            previous_context: Segment::new(prev, 10),
            turns: (first..first + n)
                .map(|i| {
                    Turn::new(i, Segment::new(format!("think {i}"), 1), Segment::new(format!("ls {i}"), 1), Segment::new("out", 1))
                })
                .collect(),
        }
    }

    #[test]
    fn bundled_templates_parse() {
        let t = PromptTemplate::summary_default();
        assert!(t.system_text.starts_with("You are maintaining a context-aware state summary"));
        assert!(!t.system_text.contains("PREVIOUS_SUMMARY"));
        PromptTemplate::critic();
    }

    #[test]
    fn first_summary_uses_problem_statement() {
        let msgs = build_prompt(&PromptTemplate::summary_default(), &input(1, 1, "Fix the float bug")).unwrap();
        assert!(msgs.user.contains("<PREVIOUS_SUMMARY>\nFix the float bug\n</PREVIOUS_SUMMARY>"));
        assert_eq!(msgs.user.matches("<TURN-1>").count(), 1);
        assert_eq!(msgs.user.matches("</TURN-").count(), 1);
    }

    #[test]
    fn blocks_in_index_order() {
        let msgs = build_prompt(&PromptTemplate::summary_default(), &input(1, 21, "p")).unwrap();
        assert_eq!(msgs.user.matches("</TURN-").count(), 21);
        let positions: Vec<usize> = (1..=21).map(|i| msgs.user.find(&format!("<TURN-{i}>")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_previous_text_rendered_verbatim() {
        let msgs = build_prompt(&PromptTemplate::summary_default(), &input(5, 2, "")).unwrap();
        assert!(msgs.user.contains("<PREVIOUS_SUMMARY>\n\n</PREVIOUS_SUMMARY>"));
        assert!(msgs.user.contains("<TURN-5>"));
    }

    #[test]
    fn missing_slots_are_errors() {
        for bad in [
            "sys only",
            "sys\n=== USER ===\n{{#turns}}<T-{{index}}>{{/turns}}",
            "sys\n=== USER ===\n{{previous_summary}}\n<T>",
            "sys\n=== USER ===\n{{previous_summary}}\n{{#turns}}<T>{{/turns}}",
        ] {
            assert!(matches!(PromptTemplate::parse(bad), Err(SummarizerError::Template(_))), "{bad}");
        }
    }

    #[test]
    fn empty_slice_rejected() {
        let inp = SummaryInput { previous_context: Segment::default(), turns: vec![] };
        assert!(build_prompt(&PromptTemplate::summary_default(), &inp).is_err());
    }
}
