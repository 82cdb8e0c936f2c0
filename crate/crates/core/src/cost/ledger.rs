use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CacheSplit, CostError, Money, PricingModel};
use crate::trajectory::TokenCount;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Agent,
    Summary,
}

impl CallKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CallKind::Agent => "agent",
            CallKind::Summary => "summary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub run_id: String,
    pub turn: usize,
    pub call_kind: CallKind,
    pub input_hit: TokenCount,
    pub input_miss: TokenCount,
    pub output: TokenCount,
    pub cost: Money,
}

impl LedgerEntry {
    pub fn priced(
        run_id: &str,
        turn: usize,
        call_kind: CallKind,
        split: CacheSplit,
        output: TokenCount,
        pricing: &PricingModel,
    ) -> Self {
        LedgerEntry {
            run_id: run_id.to_string(),
            turn,
            call_kind,
            input_hit: split.hit,
            input_miss: split.miss,
            output,
            cost: pricing.price(split.hit, split.miss, output),
        }
    }

    pub fn input_tokens(&self) -> TokenCount {
        self.input_hit + self.input_miss
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerTotals {
    pub grand: Money,
    pub agent: Money,
    pub summary: Money,
    /// `summary / grand`, 0 for an empty ledger.
    pub summary_proportion: f64,
    pub input_tokens: TokenCount,
    pub output_tokens: TokenCount,
}

impl CostLedger {
    pub fn push(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
    }

    pub fn total_of(&self, kind: CallKind) -> Money {
        self.entries.iter().filter(|e| e.call_kind == kind).map(|e| e.cost).sum()
    }

    /// Concatenates ledgers and orders entries by (run, turn, kind).
    /// The sort is stable, so equal keys keep their input order.
    pub fn merge<'a>(ledgers: impl IntoIterator<Item = &'a CostLedger>) -> CostLedger {
        let mut entries: Vec<LedgerEntry> = ledgers.into_iter().flat_map(|l| l.entries.iter().cloned()).collect();
        entries.sort_by(|a, b| (&a.run_id, a.turn, a.call_kind).cmp(&(&b.run_id, b.turn, b.call_kind)));
        CostLedger { entries }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CostError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["run_id", "turn", "call_kind", "input_hit", "input_miss", "output", "cost_micro", "cost"])?;
        for e in &self.entries {
            w.write_record([
                e.run_id.clone(),
                e.turn.to_string(),
                e.call_kind.as_str().to_string(),
                e.input_hit.to_string(),
                e.input_miss.to_string(),
                e.output.to_string(),
                e.cost.micros().to_string(),
                e.cost.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn ledger_report(ledger: &CostLedger) -> LedgerTotals {
    let agent = ledger.total_of(CallKind::Agent);
    let summary = ledger.total_of(CallKind::Summary);
    let grand: Money = ledger.entries.iter().map(|e| e.cost).sum();
    let summary_proportion = if grand == Money::ZERO { 0.0 } else { summary.0 as f64 / grand.0 as f64 };
    LedgerTotals {
        grand,
        agent,
        summary,
        summary_proportion,
        input_tokens: ledger.entries.iter().map(LedgerEntry::input_tokens).sum(),
        output_tokens: ledger.entries.iter().map(|e| e.output).sum(),
    }
}
