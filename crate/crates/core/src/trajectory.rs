//! Trajectory data model and the line-delimited JSON log format.
//!
//! A log file holds one header object on line 1 followed by one object per
//! turn. Token counts are taken from the log as recorded; nothing here
//! re-tokenizes text.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A non-negative number of tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenCount(pub u64);

impl TokenCount {
    pub const ZERO: TokenCount = TokenCount(0);

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: TokenCount) -> TokenCount {
        TokenCount(self.0.saturating_sub(other.0))
    }
}

impl Add for TokenCount {
    type Output = TokenCount;
    fn add(self, rhs: TokenCount) -> TokenCount {
        TokenCount(self.0 + rhs.0)
    }
}

impl AddAssign for TokenCount {
    fn add_assign(&mut self, rhs: TokenCount) {
        self.0 += rhs.0;
    }
}

impl Sum for TokenCount {
    fn sum<I: Iterator<Item = TokenCount>>(iter: I) -> TokenCount {
        iter.fold(TokenCount::ZERO, Add::add)
    }
}

impl From<u64> for TokenCount {
    fn from(v: u64) -> Self {
        TokenCount(v)
    }
}

impl fmt::Display for TokenCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Text together with its recorded token count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub text: String,
    pub tokens: TokenCount,
}

impl Segment {
    pub fn new(text: impl Into<String>, tokens: u64) -> Self {
        Segment { text: text.into(), tokens: TokenCount(tokens) }
    }
}

/// One (reasoning, action, observation) interaction. `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub index: usize,
    pub reasoning: Segment,
    pub action: Segment,
    pub observation: Segment,
    /// Fields found in the log that this crate does not interpret.
    pub extra: BTreeMap<String, Value>,
}

impl Turn {
    pub fn new(index: usize, reasoning: Segment, action: Segment, observation: Segment) -> Self {
        Turn { index, reasoning, action, observation, extra: BTreeMap::new() }
    }

    pub fn total_tokens(&self) -> TokenCount {
        self.reasoning.tokens + self.action.tokens + self.observation.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub id: String,
    pub system_prompt: Segment,
    pub user_prompt: Segment,
    pub turns: Vec<Turn>,
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
}

/// Per-type token sums over a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenTotals {
    pub reasoning: TokenCount,
    pub action: TokenCount,
    pub observation: TokenCount,
    pub prompt: TokenCount,
}

impl TokenTotals {
    pub fn grand_total(&self) -> TokenCount {
        self.reasoning + self.action + self.observation + self.prompt
    }
}

impl Add for TokenTotals {
    type Output = TokenTotals;
    fn add(self, rhs: TokenTotals) -> TokenTotals {
        TokenTotals {
            reasoning: self.reasoning + rhs.reasoning,
            action: self.action + rhs.action,
            observation: self.observation + rhs.observation,
            prompt: self.prompt + rhs.prompt,
        }
    }
}

impl Trajectory {
    pub fn new(id: impl Into<String>, system_prompt: Segment, user_prompt: Segment) -> Self {
        Trajectory {
            id: id.into(),
            system_prompt,
            user_prompt,
            turns: Vec::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn prompt_tokens(&self) -> TokenCount {
        self.system_prompt.tokens + self.user_prompt.tokens
    }

    /// Appends a turn with the next index.
    pub fn push_turn(&mut self, reasoning: Segment, action: Segment, observation: Segment) {
        let index = self.turns.len() + 1;
        self.turns.push(Turn::new(index, reasoning, action, observation));
    }

    /// Turn `i` (1-based).
    pub fn turn(&self, i: usize) -> &Turn {
        &self.turns[i - 1]
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        validate_indices(self.turns.iter().map(|t| t.index))
    }

    pub fn token_totals(&self) -> TokenTotals {
        token_totals(self)
    }

    /// Serializes to the canonical log format.
    pub fn to_log_string(&self) -> String {
        let mut out = String::new();
        let header = HeaderRecord {
            id: self.id.clone(),
            system_prompt: RawSegment::from(&self.system_prompt),
            user_prompt: RawSegment::from(&self.user_prompt),
            extra: self.extra.clone(),
        };
        out.push_str(&serde_json::to_string(&header).expect("header serializes"));
        out.push('\n');
        for turn in &self.turns {
            let rec = TurnRecord {
                index: turn.index as i64,
                reasoning: RawSegment::from(&turn.reasoning),
                action: RawSegment::from(&turn.action),
                observation: RawSegment::from(&turn.observation),
                extra: turn.extra.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("turn serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_log_str(s: &str) -> Result<Self, TrajectoryError> {
        parse_lines(s.lines().map(|l| Ok(l.to_string())))
    }
}

pub fn token_totals(traj: &Trajectory) -> TokenTotals {
    let mut totals = TokenTotals { prompt: traj.prompt_tokens(), ..Default::default() };
    for t in &traj.turns {
        totals.reasoning += t.reasoning.tokens;
        totals.action += t.action.tokens;
        totals.observation += t.observation.tokens;
    }
    totals
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory, TrajectoryError> {
    let file = fs::File::open(path)?;
    parse_lines(BufReader::new(file).lines())
}

pub fn save_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), TrajectoryError> {
    let mut file = fs::File::create(path)?;
    file.write_all(traj.to_log_string().as_bytes())?;
    Ok(())
}

fn validate_indices(indices: impl Iterator<Item = usize>) -> Result<(), TrajectoryError> {
    let mut expected = 1usize;
    for idx in indices {
        if idx == 0 {
            return Err(TrajectoryError::Validation("turn index 0 is not allowed".into()));
        }
        if idx < expected {
            return Err(TrajectoryError::Validation(format!(
                "duplicate or decreasing index {idx} (expected {expected})"
            )));
        }
        if idx > expected {
            return Err(TrajectoryError::Validation(format!("gap at index {expected}")));
        }
        expected += 1;
    }
    Ok(())
}

// Wire records use signed integers so that negative counts surface as
// validation errors rather than opaque parse failures.
#[derive(Serialize, Deserialize)]
struct RawSegment {
    text: String,
    tokens: i64,
}

impl From<&Segment> for RawSegment {
    fn from(s: &Segment) -> Self {
        RawSegment { text: s.text.clone(), tokens: s.tokens.0 as i64 }
    }
}

impl RawSegment {
    fn into_segment(self, what: &str, line: usize) -> Result<Segment, TrajectoryError> {
        if self.tokens < 0 {
            return Err(TrajectoryError::Validation(format!(
                "line {line}: negative token count {} in {what}",
                self.tokens
            )));
        }
        Ok(Segment { text: self.text, tokens: TokenCount(self.tokens as u64) })
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    id: String,
    system_prompt: RawSegment,
    user_prompt: RawSegment,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct TurnRecord {
    index: i64,
    reasoning: RawSegment,
    action: RawSegment,
    observation: RawSegment,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

fn parse_lines<I>(lines: I) -> Result<Trajectory, TrajectoryError>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut traj: Option<Trajectory> = None;
    for (i, line) in lines.enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| TrajectoryError::Parse { line: lineno, message: e.to_string() };
        match traj.as_mut() {
            None => {
                let h: HeaderRecord = serde_json::from_str(&line).map_err(parse_err)?;
                traj = Some(Trajectory {
                    id: h.id,
                    system_prompt: h.system_prompt.into_segment("system_prompt", lineno)?,
                    user_prompt: h.user_prompt.into_segment("user_prompt", lineno)?,
                    turns: Vec::new(),
                    extra: h.extra,
                });
            }
            Some(t) => {
                let r: TurnRecord = serde_json::from_str(&line).map_err(parse_err)?;
                if r.index <= 0 {
                    return Err(TrajectoryError::Validation(format!(
                        "line {lineno}: turn index {} must be >= 1",
                        r.index
                    )));
                }
                t.turns.push(Turn {
                    index: r.index as usize,
                    reasoning: r.reasoning.into_segment("reasoning", lineno)?,
                    action: r.action.into_segment("action", lineno)?,
                    observation: r.observation.into_segment("observation", lineno)?,
                    extra: r.extra,
                });
            }
        }
    }
    let traj = traj.ok_or(TrajectoryError::Parse { line: 1, message: "missing header line".into() })?;
    traj.validate()?;
    Ok(traj)
}
