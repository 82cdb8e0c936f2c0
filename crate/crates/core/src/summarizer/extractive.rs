use super::{heuristic_tokens, PromptTemplate, Summarizer, SummarizerError, SummaryInput, SummaryOutput};
use crate::cost::CHARS_PER_TOKEN;
use crate::trajectory::{Segment, TokenCount};

/// Offline summarizer producing a fixed-schema digest: the first and last
/// line of the previous context and of each folded action and observation.
///
/// The digest is cut to `max_tokens` under the character heuristic.
#[derive(Debug, Clone)]
pub struct ExtractiveSummarizer {
    max_tokens: u64,
    template: PromptTemplate,
    instruction_tokens: TokenCount,
}

impl ExtractiveSummarizer {
    pub fn new(max_tokens: u64) -> Self {
        Self::with_template(max_tokens, PromptTemplate::summary_default())
    }

    pub fn with_template(max_tokens: u64, template: PromptTemplate) -> Self {
        let instruction_tokens = heuristic_tokens(&template.system_text);
        ExtractiveSummarizer { max_tokens, template, instruction_tokens }
    }

    pub fn digest(input: &SummaryInput) -> String {
        let mut out = String::new();
        push_line(&mut out, "PREVIOUS", &input.previous_context.text);
        for turn in &input.turns {
            push_line(&mut out, &format!("TURN-{} ACTION", turn.index), &turn.action.text);
            push_line(&mut out, &format!("TURN-{} OBSERVATION", turn.index), &turn.observation.text);
        }
        out
    }
}

fn push_line(out: &mut String, label: &str, text: &str) {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next().unwrap_or("");
    let last = lines.last();
    out.push_str(label);
    out.push_str(": ");
    out.push_str(first);
    if let Some(last) = last {
        out.push_str(" ... ");
        out.push_str(last);
    }
    out.push('\n');
}

impl Summarizer for ExtractiveSummarizer {
    fn summarize(&self, input: &SummaryInput) -> Result<SummaryOutput, SummarizerError> {
        input.validate()?;
        let full = Self::digest(input);
        let budget = (self.max_tokens as usize).saturating_mul(CHARS_PER_TOKEN);
        let truncated = full.chars().count() > budget;
        let text: String = if truncated { full.chars().take(budget).collect() } else { full };
        let tokens = heuristic_tokens(&text);
        Ok(SummaryOutput { segment: Segment { text, tokens }, truncated })
    }

    fn instruction_tokens(&self) -> TokenCount {
        self.instruction_tokens
    }

    fn instruction_text(&self) -> &str {
        &self.template.system_text
    }
}
