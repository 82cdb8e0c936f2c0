//! Context-management strategies.
//!
//! Rendering is pure: given a trajectory, the current turn `t` and (for the
//! summarizing strategies) a [`SummaryState`], each function returns the
//! exact [`ContextView`] the agent would condition on when generating turn
//! `t`. The scheduler in [`schedule`] decides when a summary is folded in.

mod schedule;
mod view;

pub use schedule::{
    apply_summary, slice_for_summary, step_strategy, summary_due, StepOutcome, SummaryEvent, SummaryState,
};
pub use view::{
    render, render_hybrid, render_masked, render_raw, render_summarized, ContextView, ViewSegment, ViewTag,
};

use serde::{Deserialize, Serialize};

use crate::summarizer::SummarizerError;
use crate::trajectory::TokenCount;

pub const DEFAULT_PLACEHOLDER_TOKENS: u64 = 10;
pub const DEFAULT_PLACEHOLDER_TEMPLATE: &str = "Previous {lines} lines omitted for brevity.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Variant {
    Raw,
    Masking { window: usize },
    Summary { accum: usize, tail: usize },
    Hybrid { accum: usize, tail: usize, mask_window: usize },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Masking { .. } => "masking",
            Variant::Summary { .. } => "summary",
            Variant::Hybrid { .. } => "hybrid",
        }
    }

    /// `(accum, tail)` for the summarizing variants.
    pub fn summary_params(&self) -> Option<(usize, usize)> {
        match *self {
            Variant::Summary { accum, tail } | Variant::Hybrid { accum, tail, .. } => Some((accum, tail)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyConfig {
    #[serde(flatten)]
    pub variant: Variant,
    #[serde(default = "default_placeholder_tokens")]
    pub placeholder_tokens: TokenCount,
    #[serde(default = "default_placeholder_template")]
    pub placeholder_template: String,
}

fn default_placeholder_tokens() -> TokenCount {
    TokenCount(DEFAULT_PLACEHOLDER_TOKENS)
}

fn default_placeholder_template() -> String {
    DEFAULT_PLACEHOLDER_TEMPLATE.to_string()
}

impl StrategyConfig {
    pub fn new(variant: Variant) -> Self {
        StrategyConfig {
            variant,
            placeholder_tokens: default_placeholder_tokens(),
            placeholder_template: default_placeholder_template(),
        }
    }

    pub fn raw() -> Self {
        Self::new(Variant::Raw)
    }

    pub fn masking(window: usize) -> Self {
        Self::new(Variant::Masking { window })
    }

    pub fn summary(accum: usize, tail: usize) -> Self {
        Self::new(Variant::Summary { accum, tail })
    }

    pub fn hybrid(accum: usize, tail: usize, mask_window: usize) -> Self {
        Self::new(Variant::Hybrid { accum, tail, mask_window })
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let bad = |what: &str| Err(StrategyError::Config(format!("{what} must be >= 1")));
        match self.variant {
            Variant::Raw => Ok(()),
            Variant::Masking { window } if window == 0 => bad("window"),
            Variant::Summary { accum, .. } if accum == 0 => bad("accum"),
            Variant::Hybrid { accum, .. } if accum == 0 => bad("accum"),
            Variant::Hybrid { mask_window, .. } if mask_window == 0 => bad("mask_window"),
            _ => Ok(()),
        }
    }

    /// Placeholder text for an observation spanning `lines` lines.
    pub fn placeholder_text(&self, lines: usize) -> String {
        let n = lines.to_string();
        let mut out = String::with_capacity(self.placeholder_template.len() + n.len());
        for (k, part) in self.placeholder_template.split("{lines}").enumerate() {
            if k > 0 {
                out.push_str(&n);
            }
            out.push_str(part);
        }
        out
    }

    /// Short human-readable label, e.g. `summary(N=21,M=10)`.
    pub fn label(&self) -> String {
        match self.variant {
            Variant::Raw => "raw".into(),
            Variant::Masking { window } => format!("masking(M={window})"),
            Variant::Summary { accum, tail } => format!("summary(N={accum},M={tail})"),
            Variant::Hybrid { accum, tail, mask_window } => format!("hybrid(N={accum},M={tail},W={mask_window})"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    #[error("turn {t} out of range 1..={max}")]
    OutOfBounds { t: usize, max: usize },
    #[error("invalid strategy config: {0}")]
    Config(String),
    #[error("summary not due at turn {t}")]
    NotDue { t: usize },
    #[error("inconsistent summary state: t_last = {t_last} at turn {t}")]
    Inconsistent { t_last: usize, t: usize },
    #[error("summarizer failed at turn {turn}: {source}")]
    Summarizer {
        turn: usize,
        #[source]
        source: SummarizerError,
    },
}
