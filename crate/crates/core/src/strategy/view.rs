use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::{StrategyConfig, StrategyError, SummaryState, Variant};
use crate::trajectory::{Segment, TokenCount, Trajectory, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewTag {
    SystemPrompt,
    UserPrompt,
    /// A summary folding turns `1..=through`.
    Summary { through: usize },
    Reasoning(usize),
    Action(usize),
    Observation(usize),
    MaskedObservation(usize),
}

impl ViewTag {
    pub fn turn_index(&self) -> Option<usize> {
        match *self {
            ViewTag::Reasoning(i) | ViewTag::Action(i) | ViewTag::Observation(i) | ViewTag::MaskedObservation(i) => {
                Some(i)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewSegment<'a> {
    pub tag: ViewTag,
    pub text: Cow<'a, str>,
    pub tokens: TokenCount,
}

/// The message sequence presented to the agent at one turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextView<'a> {
    pub segments: Vec<ViewSegment<'a>>,
    pub total_tokens: TokenCount,
    /// Observations that were due for masking but kept because the
    /// placeholder would have been larger.
    pub kept_small: Vec<usize>,
}

impl<'a> ContextView<'a> {
    fn with_prompts(traj: &'a Trajectory, capacity: usize) -> Self {
        let mut v = ContextView { segments: Vec::with_capacity(capacity), total_tokens: TokenCount::ZERO, kept_small: Vec::new() };
        v.push_borrowed(ViewTag::SystemPrompt, &traj.system_prompt);
        v.push_borrowed(ViewTag::UserPrompt, &traj.user_prompt);
        v
    }

    fn push_borrowed(&mut self, tag: ViewTag, seg: &'a Segment) {
        self.total_tokens += seg.tokens;
        self.segments.push(ViewSegment { tag, text: Cow::Borrowed(&seg.text), tokens: seg.tokens });
    }

    fn push_owned(&mut self, tag: ViewTag, text: String, tokens: TokenCount) {
        self.total_tokens += tokens;
        self.segments.push(ViewSegment { tag, text: Cow::Owned(text), tokens });
    }

    /// Pushes a turn, masking its observation when `mask` is set.
    fn push_turn(&mut self, turn: &'a Turn, mask: bool, cfg: &StrategyConfig) {
        let i = turn.index;
        self.push_borrowed(ViewTag::Reasoning(i), &turn.reasoning);
        self.push_borrowed(ViewTag::Action(i), &turn.action);
        if !mask {
            self.push_borrowed(ViewTag::Observation(i), &turn.observation);
        } else if cfg.placeholder_tokens > turn.observation.tokens {
            self.kept_small.push(i);
            self.push_borrowed(ViewTag::Observation(i), &turn.observation);
        } else {
            let lines = turn.observation.text.lines().count();
            self.push_owned(ViewTag::MaskedObservation(i), cfg.placeholder_text(lines), cfg.placeholder_tokens);
        }
    }

    /// Number of distinct turns rendered (masked or not).
    pub fn turn_count(&self) -> usize {
        self.segments.iter().filter(|s| matches!(s.tag, ViewTag::Reasoning(_))).count()
    }

    pub fn masked_count(&self) -> usize {
        self.segments.iter().filter(|s| matches!(s.tag, ViewTag::MaskedObservation(_))).count()
    }

    pub fn summary(&self) -> Option<&ViewSegment<'a>> {
        self.segments.iter().find(|s| matches!(s.tag, ViewTag::Summary { .. }))
    }
}

fn check_t(traj: &Trajectory, t: usize) -> Result<(), StrategyError> {
    let max = traj.turns.len() + 1;
    if t == 0 || t > max {
        return Err(StrategyError::OutOfBounds { t, max });
    }
    Ok(())
}

/// Full history: both prompts and turns `1..t` verbatim.
pub fn render_raw<'a>(traj: &'a Trajectory, t: usize) -> Result<ContextView<'a>, StrategyError> {
    check_t(traj, t)?;
    let cfg = StrategyConfig::raw();
    let mut v = ContextView::with_prompts(traj, 2 + 3 * (t - 1));
    for turn in &traj.turns[..t - 1] {
        v.push_turn(turn, false, &cfg);
    }
    Ok(v)
}

/// Observation `i` is replaced by a placeholder iff `i < t - window`.
pub fn render_masked<'a>(traj: &'a Trajectory, t: usize, cfg: &StrategyConfig) -> Result<ContextView<'a>, StrategyError> {
    check_t(traj, t)?;
    let window = match cfg.variant {
        Variant::Masking { window } => window,
        Variant::Raw => usize::MAX,
        _ => return Err(StrategyError::Config(format!("render_masked needs a masking config, got {}", cfg.label()))),
    };
    let mut v = ContextView::with_prompts(traj, 2 + 3 * (t - 1));
    for turn in &traj.turns[..t - 1] {
        v.push_turn(turn, turn.index.saturating_add(window) < t, cfg);
    }
    Ok(v)
}

fn render_condensed<'a>(
    traj: &'a Trajectory,
    state: &SummaryState,
    t: usize,
    cfg: &StrategyConfig,
    mask_window: Option<usize>,
) -> Result<ContextView<'a>, StrategyError> {
    check_t(traj, t)?;
    if state.t_last >= t && state.t_last > 0 {
        return Err(StrategyError::Inconsistent { t_last: state.t_last, t });
    }
    let retained = &traj.turns[state.t_last.min(t - 1)..t - 1];
    let mut v = ContextView::with_prompts(traj, 3 + 3 * retained.len());
    if state.t_last > 0 {
        v.push_owned(ViewTag::Summary { through: state.t_last }, state.s_last.text.clone(), state.s_last.tokens);
    }
    for turn in retained {
        let mask = mask_window.is_some_and(|w| turn.index.saturating_add(w) < t);
        v.push_turn(turn, mask, cfg);
    }
    Ok(v)
}

/// Prompts, the latest summary (once one exists) and the turns after it.
pub fn render_summarized<'a>(
    traj: &'a Trajectory,
    state: &SummaryState,
    t: usize,
    cfg: &StrategyConfig,
) -> Result<ContextView<'a>, StrategyError> {
    render_condensed(traj, state, t, cfg, None)
}

/// As [`render_summarized`], with retained observations older than the
/// mask window replaced by placeholders.
pub fn render_hybrid<'a>(
    traj: &'a Trajectory,
    state: &SummaryState,
    t: usize,
    cfg: &StrategyConfig,
) -> Result<ContextView<'a>, StrategyError> {
    let Variant::Hybrid { mask_window, .. } = cfg.variant else {
        return Err(StrategyError::Config(format!("render_hybrid needs a hybrid config, got {}", cfg.label())));
    };
    render_condensed(traj, state, t, cfg, Some(mask_window))
}

/// Renders with whichever strategy `cfg` selects.
pub fn render<'a>(
    traj: &'a Trajectory,
    state: &SummaryState,
    t: usize,
    cfg: &StrategyConfig,
) -> Result<ContextView<'a>, StrategyError> {
    match cfg.variant {
        Variant::Raw => render_raw(traj, t),
        Variant::Masking { .. } => render_masked(traj, t, cfg),
        Variant::Summary { .. } => render_summarized(traj, state, t, cfg),
        Variant::Hybrid { .. } => render_hybrid(traj, state, t, cfg),
    }
}
