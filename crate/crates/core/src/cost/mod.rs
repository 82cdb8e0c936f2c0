//! Token counting, prefix-cache simulation, pricing and the cost ledger.

mod cache;
mod ledger;
mod pricing;
mod tokenizer;

pub use cache::{prefix_cache_split, CacheSplit, CacheState, KeyKind, RequestProfile, SegmentKey};
pub use ledger::{ledger_report, CallKind, CostLedger, LedgerEntry, LedgerTotals};
pub use pricing::{load_pricing_file, price_call, Money, PricingFile, PricingModel, Rate};
pub use tokenizer::{count_tokens, CharHeuristic, TokenCounter, CHARS_PER_TOKEN};

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("invalid pricing: {0}")]
    Pricing(String),
    #[error("negative token count {0}")]
    NegativeCount(i64),
    #[error("unknown pricing model `{0}`")]
    UnknownModel(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("pricing file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
