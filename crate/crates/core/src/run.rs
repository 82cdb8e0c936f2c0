//! Per-turn driver shared by replay and simulation.
//!
//! At each turn `t` the driver steps the strategy, prices the summary call
//! (if one fired) against the summarizer's cache lineage, then prices the
//! agent call against the agent's cache lineage. The complete mutable state
//! lives in a [`RunCheckpoint`], which serializes to JSON so a replay can
//! stop and resume with an identical ledger.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::{CacheState, CallKind, CostError, CostLedger, LedgerEntry, Money, PricingModel, RequestProfile};
use crate::strategy::{step_strategy, StrategyConfig, StrategyError, SummaryState};
use crate::summarizer::Summarizer;
use crate::trajectory::{TokenCount, Trajectory};

/// One agent call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub context_tokens: TokenCount,
    /// Cache split of the agent request.
    pub input_hit: TokenCount,
    pub input_miss: TokenCount,
    /// Everything spent at this turn, including a summary call if one fired.
    pub call_cost: Money,
    pub cumulative_cost: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCheckpoint {
    pub run_id: String,
    pub config_fingerprint: String,
    pub next_turn: usize,
    pub state: SummaryState,
    pub agent_cache: CacheState,
    pub summary_cache: CacheState,
    pub ledger: CostLedger,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("checkpoint does not match this run: {0}")]
    Checkpoint(String),
    #[error("checkpoint: {0}")]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Stable short identifier of a strategy config.
pub fn config_fingerprint(cfg: &StrategyConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

pub struct RunDriver<'a> {
    traj: &'a Trajectory,
    cfg: StrategyConfig,
    pricing: PricingModel,
    summarizer: &'a dyn Summarizer,
    last_turn: usize,
    ck: RunCheckpoint,
}

impl<'a> RunDriver<'a> {
    /// Steps turns `1..=traj.turns.len()`; the agent call at turn `t`
    /// produces recorded turn `t`.
    pub fn new(
        traj: &'a Trajectory,
        cfg: StrategyConfig,
        pricing: PricingModel,
        summarizer: &'a dyn Summarizer,
    ) -> Result<Self, RunError> {
        cfg.validate()?;
        let ck = RunCheckpoint {
            run_id: traj.id.clone(),
            config_fingerprint: config_fingerprint(&cfg),
            next_turn: 1,
            state: SummaryState::new(traj),
            agent_cache: CacheState::new(),
            summary_cache: CacheState::new(),
            ledger: CostLedger::default(),
            points: Vec::new(),
        };
        Ok(RunDriver { traj, cfg, pricing, summarizer, last_turn: traj.turns.len(), ck })
    }

    pub fn resume(
        traj: &'a Trajectory,
        cfg: StrategyConfig,
        pricing: PricingModel,
        summarizer: &'a dyn Summarizer,
        ck: RunCheckpoint,
    ) -> Result<Self, RunError> {
        let mut driver = Self::new(traj, cfg, pricing, summarizer)?;
        if ck.run_id != driver.ck.run_id {
            return Err(RunError::Checkpoint(format!("run id `{}` != `{}`", ck.run_id, driver.ck.run_id)));
        }
        if ck.config_fingerprint != driver.ck.config_fingerprint {
            return Err(RunError::Checkpoint("strategy config differs".into()));
        }
        if ck.next_turn == 0 || ck.next_turn > driver.last_turn + 1 || ck.state.t_last >= ck.next_turn {
            return Err(RunError::Checkpoint(format!("turn {} is outside this trajectory", ck.next_turn)));
        }
        driver.ck = ck;
        Ok(driver)
    }

    pub fn checkpoint(&self) -> &RunCheckpoint {
        &self.ck
    }

    pub fn is_done(&self) -> bool {
        self.ck.next_turn > self.last_turn
    }

    pub fn step(&mut self) -> Result<Option<CurvePoint>, RunError> {
        if self.is_done() {
            return Ok(None);
        }
        let t = self.ck.next_turn;
        let outcome = step_strategy(self.traj, &self.ck.state, t, &self.cfg, self.summarizer)?;
        let mut call_cost = Money::ZERO;

        if let (Some(event), Some(input)) = (&outcome.event, &outcome.summary_input) {
            let profile = RequestProfile::for_summary(
                self.summarizer.instruction_text(),
                self.summarizer.instruction_tokens(),
                input,
            );
            let split = self.ck.summary_cache.observe(profile);
            let entry =
                LedgerEntry::priced(&self.ck.run_id, t, CallKind::Summary, split, event.output_tokens, &self.pricing);
            call_cost += entry.cost;
            self.ck.ledger.push(entry);
        }

        let split = self.ck.agent_cache.observe(RequestProfile::from_view(&outcome.view));
        let generated = self.traj.turn(t);
        let output = generated.reasoning.tokens + generated.action.tokens;
        let entry = LedgerEntry::priced(&self.ck.run_id, t, CallKind::Agent, split, output, &self.pricing);
        call_cost += entry.cost;
        self.ck.ledger.push(entry);

        let cumulative_cost = self.ck.points.last().map_or(Money::ZERO, |p| p.cumulative_cost) + call_cost;
        let point = CurvePoint {
            t,
            context_tokens: outcome.view.total_tokens,
            input_hit: split.hit,
            input_miss: split.miss,
            call_cost,
            cumulative_cost,
        };
        self.ck.points.push(point);
        self.ck.state = outcome.state;
        self.ck.next_turn += 1;
        Ok(Some(point))
    }

    /// Steps until the trajectory is exhausted or `stop_before` is reached.
    pub fn run_until(&mut self, stop_before: Option<usize>) -> Result<(), RunError> {
        while !self.is_done() && stop_before.is_none_or(|s| self.ck.next_turn < s) {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_checkpoint(self) -> RunCheckpoint {
        self.ck
    }
}

pub fn write_curve_csv<W: Write>(
    points: &[CurvePoint],
    cfg: &StrategyConfig,
    out: W,
) -> Result<(), CostError> {
    let fingerprint = config_fingerprint(cfg);
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "context_tokens",
        "input_hit",
        "input_miss",
        "call_cost",
        "cumulative_cost",
        "strategy",
        "config_fingerprint",
    ])?;
    for p in points {
        w.write_record([
            p.t.to_string(),
            p.context_tokens.to_string(),
            p.input_hit.to_string(),
            p.input_miss.to_string(),
            p.call_cost.to_string(),
            p.cumulative_cost.to_string(),
            cfg.label(),
            fingerprint.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
