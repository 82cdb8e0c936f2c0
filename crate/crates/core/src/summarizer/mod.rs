//! Summary generation for the summarizing strategies.
//!
//! Two backends share the [`Summarizer`] trait: an offline extractive digest
//! (deterministic, used by tests, simulation replays and the CLI by default)
//! and a chat-completion client.

mod extractive;
mod prompt;
mod remote;

pub use extractive::ExtractiveSummarizer;
pub use prompt::{build_prompt, PromptMessages, PromptTemplate, CRITIC_TEMPLATE, SUMMARY_TEMPLATE};
pub use remote::{RemoteConfig, RemoteSummarizer, API_KEY_ENV};

use serde::{Deserialize, Serialize};

use crate::cost::{count_tokens, CharHeuristic};
use crate::trajectory::{Segment, TokenCount, Turn};

/// What the summarizer sees: the previous summary (or the task statement)
/// and the contiguous slice of turns being folded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryInput {
    pub previous_context: Segment,
    pub turns: Vec<Turn>,
}

impl SummaryInput {
    pub fn validate(&self) -> Result<(), SummarizerError> {
        let Some(first) = self.turns.first() else {
            return Err(SummarizerError::Input("summary slice is empty".into()));
        };
        for (k, turn) in self.turns.iter().enumerate() {
            if turn.index != first.index + k {
                return Err(SummarizerError::Input(format!("non-contiguous turn index {}", turn.index)));
            }
        }
        Ok(())
    }

    /// Recorded tokens of the previous context and every folded segment.
    pub fn total_tokens(&self) -> TokenCount {
        self.previous_context.tokens + self.turns.iter().map(Turn::total_tokens).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryOutput {
    pub segment: Segment,
    /// Set when the summary was cut to fit the configured output budget.
    pub truncated: bool,
}

impl SummaryOutput {
    pub fn new(segment: Segment) -> Self {
        SummaryOutput { segment, truncated: false }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SummarizerError {
    #[error("invalid summary input: {0}")]
    Input(String),
    #[error("template error: {0}")]
    Template(String),
    #[error("summarizer transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed summarizer response: {0}")]
    Response(String),
}

pub trait Summarizer: Send + Sync {
    fn summarize(&self, input: &SummaryInput) -> Result<SummaryOutput, SummarizerError>;

    /// Tokens of the fixed instruction sent with every request.
    fn instruction_tokens(&self) -> TokenCount {
        TokenCount::ZERO
    }

    /// Stable identity of the instruction, used as the cache key of the
    /// summarizer's system prompt.
    fn instruction_text(&self) -> &str {
        ""
    }
}

pub const DEFAULT_SUMMARY_MAX_TOKENS: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SummarizerSpec {
    Extractive {
        #[serde(default = "default_max_tokens")]
        max_tokens: TokenCount,
    },
    Remote(RemoteConfig),
}

fn default_max_tokens() -> TokenCount {
    TokenCount(DEFAULT_SUMMARY_MAX_TOKENS)
}

impl Default for SummarizerSpec {
    fn default() -> Self {
        SummarizerSpec::Extractive { max_tokens: default_max_tokens() }
    }
}

impl SummarizerSpec {
    pub fn build(&self, template: PromptTemplate) -> Box<dyn Summarizer> {
        match self {
            SummarizerSpec::Extractive { max_tokens } => {
                Box::new(ExtractiveSummarizer::with_template(max_tokens.0, template))
            }
            SummarizerSpec::Remote(cfg) => Box::new(RemoteSummarizer::new(cfg.clone(), template)),
        }
    }
}

/// Instruction token count under the default heuristic.
pub(crate) fn heuristic_tokens(text: &str) -> TokenCount {
    count_tokens(text, &CharHeuristic)
}
