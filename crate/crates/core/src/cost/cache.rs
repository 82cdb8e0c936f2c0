//! Prefix-cache model.
//!
//! A request is described by its ordered segment identities. The cached
//! portion of a request is the longest common prefix with the immediately
//! preceding request of the same lineage; no TTL and no cross-run sharing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::strategy::{ContextView, ViewTag};
use crate::summarizer::SummaryInput;
use crate::trajectory::{Segment, TokenCount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyKind {
    SystemPrompt,
    UserPrompt,
    Summary,
    Reasoning,
    Action,
    Observation,
    MaskedObservation,
    SummaryInstruction,
    PreviousContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentKey {
    pub kind: KeyKind,
    pub index: usize,
    pub hash: u64,
    pub tokens: TokenCount,
}

impl SegmentKey {
    pub fn new(kind: KeyKind, index: usize, text: &str, tokens: TokenCount) -> Self {
        SegmentKey { kind, index, hash: content_hash(text), tokens }
    }
}

fn content_hash(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestProfile {
    pub segments: Vec<SegmentKey>,
}

impl RequestProfile {
    pub fn total_tokens(&self) -> TokenCount {
        self.segments.iter().map(|s| s.tokens).sum()
    }

    pub fn from_view(view: &ContextView<'_>) -> Self {
        let segments = view
            .segments
            .iter()
            .map(|s| {
                let (kind, index) = match s.tag {
                    ViewTag::SystemPrompt => (KeyKind::SystemPrompt, 0),
                    ViewTag::UserPrompt => (KeyKind::UserPrompt, 0),
                    ViewTag::Summary { through } => (KeyKind::Summary, through),
                    ViewTag::Reasoning(i) => (KeyKind::Reasoning, i),
                    ViewTag::Action(i) => (KeyKind::Action, i),
                    ViewTag::Observation(i) => (KeyKind::Observation, i),
                    ViewTag::MaskedObservation(i) => (KeyKind::MaskedObservation, i),
                };
                SegmentKey::new(kind, index, &s.text, s.tokens)
            })
            .collect();
        RequestProfile { segments }
    }

    /// Profile of a summarization request: instruction, previous context
    /// (keyed by the last turn it covers), then the folded turns.
    pub fn for_summary(instruction: &str, instruction_tokens: TokenCount, input: &SummaryInput) -> Self {
        let covered = input.turns.first().map_or(0, |t| t.index - 1);
        let mut segments = Vec::with_capacity(2 + 3 * input.turns.len());
        segments.push(SegmentKey::new(KeyKind::SummaryInstruction, 0, instruction, instruction_tokens));
        let prev: &Segment = &input.previous_context;
        segments.push(SegmentKey::new(KeyKind::PreviousContext, covered, &prev.text, prev.tokens));
        for t in &input.turns {
            segments.push(SegmentKey::new(KeyKind::Reasoning, t.index, &t.reasoning.text, t.reasoning.tokens));
            segments.push(SegmentKey::new(KeyKind::Action, t.index, &t.action.text, t.action.tokens));
            segments.push(SegmentKey::new(KeyKind::Observation, t.index, &t.observation.text, t.observation.tokens));
        }
        RequestProfile { segments }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheSplit {
    pub hit: TokenCount,
    pub miss: TokenCount,
}

/// Cache state of one conversation lineage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    pub previous_request: Option<RequestProfile>,
}

impl CacheState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Splits `profile` into cached and uncached tokens and remembers it.
    pub fn observe(&mut self, profile: RequestProfile) -> CacheSplit {
        let total = profile.total_tokens();
        let hit = match &self.previous_request {
            None => TokenCount::ZERO,
            Some(prev) => prev
                .segments
                .iter()
                .zip(&profile.segments)
                .take_while(|(a, b)| a == b)
                .map(|(a, _)| a.tokens)
                .sum(),
        };
        self.previous_request = Some(profile);
        CacheSplit { hit, miss: total.saturating_sub(hit) }
    }
}

pub fn prefix_cache_split(view: &ContextView<'_>, cache: &CacheState) -> (CacheSplit, CacheState) {
    let mut next = cache.clone();
    let split = next.observe(RequestProfile::from_view(view));
    (split, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{render_masked, render_raw, StrategyConfig};
    use crate::trajectory::Trajectory;

    fn traj(n: usize) -> Trajectory {
        let mut t = Trajectory::new("c", Segment::new("sys", 100), Segment::new("user", 50));
        for i in 1..=n {
            t.push_turn(Segment::new(format!("r{i}"), 10), Segment::new(format!("a{i}"), 5), Segment::new(format!("o{i}"), 100 + i as u64));
        }
        t
    }

    #[test]
    fn first_call_misses_everything() {
        let t = traj(3);
        let v = render_raw(&t, 4).unwrap();
        let (split, next) = prefix_cache_split(&v, &CacheState::new());
        assert_eq!(split.hit.0, 0);
        assert_eq!(split.miss, v.total_tokens);
        assert!(next.previous_request.is_some());
    }

    #[test]
    fn raw_hits_previous_total() {
        let t = traj(5);
        let mut cache = CacheState::new();
        let mut prev_total = TokenCount::ZERO;
        for step in 1..=6 {
            let v = render_raw(&t, step).unwrap();
            let split = cache.observe(RequestProfile::from_view(&v));
            if step > 1 {
                assert_eq!(split.hit, prev_total);
                assert_eq!(split.miss, t.turn(step - 1).total_tokens());
            }
            prev_total = v.total_tokens;
        }
    }

    #[test]
    fn masking_breaks_prefix_at_newly_masked_observation() {
        let t = traj(6);
        let cfg = StrategyConfig::masking(2);
        let mut cache = CacheState::new();
        cache.observe(RequestProfile::from_view(&render_masked(&t, 4, &cfg).unwrap()));
        // at t = 5 observation 2 becomes masked
        let v = render_masked(&t, 5, &cfg).unwrap();
        let split = cache.observe(RequestProfile::from_view(&v));
        // prefix: prompts, turn 1 (already masked), r2, a2
        assert_eq!(split.hit.0, 150 + 10 + 5 + 10 + 10 + 5);
        assert_eq!(split.hit + split.miss, v.total_tokens);
    }

    #[test]
    fn summary_lineage_reuses_instruction_only() {
        use crate::trajectory::Turn;
        let turns = |a: usize| (a..a + 3).map(|i| Turn::new(i, Segment::new("r", 1), Segment::new("a", 1), Segment::new("o", 1))).collect();
        let mut cache = CacheState::new();
        let first = SummaryInput { previous_context: Segment::new("task", 5), turns: turns(1) };
        let second = SummaryInput { previous_context: Segment::new("S1", 7), turns: turns(4) };
        assert_eq!(cache.observe(RequestProfile::for_summary("inst", TokenCount(40), &first)).hit.0, 0);
        assert_eq!(cache.observe(RequestProfile::for_summary("inst", TokenCount(40), &second)).hit.0, 40);
    }
}
