use serde::{Deserialize, Serialize};

use super::{render, ContextView, StrategyConfig, StrategyError};
use crate::summarizer::{Summarizer, SummaryInput, SummaryOutput};
use crate::trajectory::{Segment, TokenCount, Trajectory};

/// One summarization call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEvent {
    /// The turn whose agent call was preceded by this summary.
    pub at_turn: usize,
    /// Inclusive range of turns folded into the summary.
    pub folded_range: (usize, usize),
    pub input_tokens: TokenCount,
    pub output_tokens: TokenCount,
    #[serde(default)]
    pub truncated: bool,
}

/// Mutable summarization state of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryState {
    /// Last turn folded into the current summary; 0 before the first one.
    pub t_last: usize,
    /// Current summary, or the user prompt before the first summary.
    pub s_last: Segment,
    pub events: Vec<SummaryEvent>,
}

impl SummaryState {
    pub fn new(traj: &Trajectory) -> Self {
        SummaryState { t_last: 0, s_last: traj.user_prompt.clone(), events: Vec::new() }
    }
}

/// True when the history since the last summary holds at least
/// `accum + tail` turns. Always false for non-summarizing strategies.
pub fn summary_due(state: &SummaryState, t: usize, cfg: &StrategyConfig) -> bool {
    let Some((accum, tail)) = cfg.variant.summary_params() else {
        return false;
    };
    let history = t.saturating_sub(1);
    history >= state.t_last && history - state.t_last >= accum + tail
}

/// The previous summary plus turns `t_last+1 ..= t-1-tail`, observations unmasked.
pub fn slice_for_summary(
    traj: &Trajectory,
    state: &SummaryState,
    t: usize,
    cfg: &StrategyConfig,
) -> Result<SummaryInput, StrategyError> {
    if !summary_due(state, t, cfg) {
        return Err(StrategyError::NotDue { t });
    }
    let (_, tail) = cfg.variant.summary_params().expect("due implies summarizing variant");
    let max = traj.turns.len() + 1;
    if t > max {
        return Err(StrategyError::OutOfBounds { t, max });
    }
    let last = t - 1 - tail;
    Ok(SummaryInput {
        previous_context: state.s_last.clone(),
        turns: traj.turns[state.t_last..last].to_vec(),
    })
}

pub fn apply_summary(
    state: &SummaryState,
    input: &SummaryInput,
    summary: SummaryOutput,
    input_tokens: TokenCount,
    t: usize,
    cfg: &StrategyConfig,
) -> Result<SummaryState, StrategyError> {
    if !summary_due(state, t, cfg) {
        return Err(StrategyError::NotDue { t });
    }
    let (_, tail) = cfg.variant.summary_params().expect("due implies summarizing variant");
    let t_last = t - 1 - tail;
    let first = input.turns.first().map_or(state.t_last + 1, |turn| turn.index);
    let mut next = state.clone();
    next.events.push(SummaryEvent {
        at_turn: t,
        folded_range: (first, t_last),
        input_tokens,
        output_tokens: summary.segment.tokens,
        truncated: summary.truncated,
    });
    next.t_last = t_last;
    next.s_last = summary.segment;
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct StepOutcome<'a> {
    pub view: ContextView<'a>,
    pub state: SummaryState,
    pub event: Option<SummaryEvent>,
    /// The slice that was summarized at this step, if any.
    pub summary_input: Option<SummaryInput>,
}

/// One turn of a run: summarize if due, then render.
pub fn step_strategy<'a>(
    traj: &'a Trajectory,
    state: &SummaryState,
    t: usize,
    cfg: &StrategyConfig,
    summarizer: &dyn Summarizer,
) -> Result<StepOutcome<'a>, StrategyError> {
    if summary_due(state, t, cfg) {
        let input = slice_for_summary(traj, state, t, cfg)?;
        let output = summarizer
            .summarize(&input)
            .map_err(|source| StrategyError::Summarizer { turn: t, source })?;
        let input_tokens = summarizer.instruction_tokens() + input.total_tokens();
        let next = apply_summary(state, &input, output, input_tokens, t, cfg)?;
        let view = render(traj, &next, t, cfg)?;
        let event = next.events.last().cloned();
        return Ok(StepOutcome { view, state: next, event, summary_input: Some(input) });
    }
    let view = render(traj, state, t, cfg)?;
    Ok(StepOutcome { view, state: state.clone(), event: None, summary_input: None })
}
