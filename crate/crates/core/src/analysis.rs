//! Statistical comparison of strategy runs.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trajectory::{token_totals, TokenTotals, Trajectory};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("instance ids differ: {0}")]
    IdMismatch(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-instance metric values of two strategies, aligned by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    ids: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSamples {
    pub fn new(ids: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self, AnalysisError> {
        if ids.is_empty() {
            return Err(AnalysisError::Validation("no samples".into()));
        }
        if a.len() != ids.len() || b.len() != ids.len() {
            return Err(AnalysisError::Validation(format!(
                "length mismatch: {} ids, {} a values, {} b values",
                ids.len(),
                a.len(),
                b.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(AnalysisError::Validation(format!("duplicate id `{dup}`")));
        }
        Ok(PairedSamples { ids, a, b })
    }

    /// Numbered ids `0..n`.
    pub fn unnamed(a: Vec<f64>, b: Vec<f64>) -> Result<Self, AnalysisError> {
        let ids = (0..a.len()).map(|i| i.to_string()).collect();
        Self::new(ids, a, b)
    }

    /// Pairs two id → value maps; every id must appear in both.
    pub fn from_maps(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Result<Self, AnalysisError> {
        let only_a: Vec<&str> = a.keys().filter(|k| !b.contains_key(*k)).map(String::as_str).collect();
        let only_b: Vec<&str> = b.keys().filter(|k| !a.contains_key(*k)).map(String::as_str).collect();
        if !only_a.is_empty() || !only_b.is_empty() {
            return Err(AnalysisError::IdMismatch(format!(
                "only in A: [{}]; only in B: [{}]",
                only_a.join(", "),
                only_b.join(", ")
            )));
        }
        let ids: Vec<String> = a.keys().cloned().collect();
        let av = ids.iter().map(|k| a[k]).collect();
        let bv = ids.iter().map(|k| b[k]).collect();
        Self::new(ids, av, bv)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn swapped(&self) -> Self {
        PairedSamples { ids: self.ids.clone(), a: self.b.clone(), b: self.a.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub significant: bool,
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    pub n: usize,
}

impl BootstrapResult {
    /// Symmetric half-width, averaging the two asymmetric bounds.
    pub fn symmetric_half_width(&self) -> f64 {
        ((self.delta - self.ci_low) + (self.ci_high - self.delta)) / 2.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean paired difference of one resample. Replicate `r` draws its indices
/// from ChaCha8 stream `r` of `seed`, so results do not depend on how
/// replicates are scheduled and swapping a/b negates every replicate.
fn replicate(diffs: &[f64], seed: u64, r: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    let n = diffs.len();
    let mut sum = 0.0;
    for _ in 0..n {
        sum += diffs[rng.gen_range(0..n)];
    }
    sum / n as f64
}

/// Nearest-rank lower index for the `(1 - level) / 2` tail; the upper
/// bound uses the mirrored rank.
fn tail_rank(replicates: usize, level: f64) -> usize {
    let k = ((1.0 - level) / 2.0 * replicates as f64 - 1e-9).ceil() as usize;
    k.clamp(1, replicates.div_ceil(2))
}

/// Paired nonparametric bootstrap of `mean(a) - mean(b)`.
///
/// The p-value is `2 * min(P(Δ* >= 0), P(Δ* <= 0))` over the replicates,
/// clamped to 1; both tails count exact zeros.
pub fn paired_bootstrap(
    s: &PairedSamples,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult, AnalysisError> {
    if s.is_empty() {
        return Err(AnalysisError::Validation("no samples".into()));
    }
    if replicates == 0 {
        return Err(AnalysisError::Validation("replicate count must be >= 1".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(AnalysisError::Validation(format!("level {level} must lie in (0, 1)")));
    }
    let diffs: Vec<f64> = s.a.iter().zip(&s.b).map(|(x, y)| x - y).collect();
    let mut reps: Vec<f64> = (0..replicates as u64).into_par_iter().map(|r| replicate(&diffs, seed, r)).collect();

    let ge = reps.iter().filter(|&&d| d >= 0.0).count();
    let le = reps.iter().filter(|&&d| d <= 0.0).count();
    let p_value = (2.0 * ge.min(le) as f64 / replicates as f64).min(1.0);

    reps.sort_by(f64::total_cmp);
    let k = tail_rank(replicates, level);
    Ok(BootstrapResult {
        delta: mean(&s.a) - mean(&s.b),
        ci_low: reps[k - 1],
        ci_high: reps[replicates - k],
        p_value,
        significant: p_value < SIGNIFICANCE_LEVEL,
        replicates,
        level,
        seed,
        n: s.len(),
    })
}

/// Reads an `instance_id,metric` CSV (header required).
pub fn read_metric_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>, AnalysisError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let (Some(id), Some(v)) = (rec.get(0), rec.get(1)) else {
            return Err(AnalysisError::Validation(format!("line {line}: expected instance_id,metric")));
        };
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| AnalysisError::Validation(format!("line {line}: `{v}` is not a number")))?;
        if out.insert(id.trim().to_string(), value).is_some() {
            return Err(AnalysisError::Validation(format!("line {line}: duplicate id `{id}`")));
        }
    }
    Ok(out)
}

/// Exact token-type shares as integer numerators over a common total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TokenShares {
    pub reasoning: u64,
    pub action: u64,
    pub observation: u64,
    pub prompts: u64,
    pub total: u64,
}

impl TokenShares {
    pub fn from_totals(t: &TokenTotals) -> Result<Self, AnalysisError> {
        let total = t.grand_total().0;
        if total == 0 {
            return Err(AnalysisError::Validation("corpus has zero tokens".into()));
        }
        Ok(TokenShares {
            reasoning: t.reasoning.0,
            action: t.action.0,
            observation: t.observation.0,
            prompts: t.prompt.0,
            total,
        })
    }

    pub fn fractions(&self) -> [f64; 4] {
        let d = self.total as f64;
        [self.reasoning as f64 / d, self.action as f64 / d, self.observation as f64 / d, self.prompts as f64 / d]
    }

    /// Exact rational equality of every share.
    pub fn same_ratios(&self, other: &TokenShares) -> bool {
        let eq = |x: u64, y: u64| x as u128 * other.total as u128 == y as u128 * self.total as u128;
        eq(self.reasoning, other.reasoning)
            && eq(self.action, other.action)
            && eq(self.observation, other.observation)
            && eq(self.prompts, other.prompts)
    }
}

pub fn corpus_totals(corpus: &[Trajectory], include_prompts: bool) -> TokenTotals {
    corpus
        .iter()
        .map(|t| {
            let mut tot = token_totals(t);
            if !include_prompts {
                tot.prompt = Default::default();
            }
            tot
        })
        .fold(TokenTotals::default(), |acc, t| acc + t)
}

pub fn token_type_shares(corpus: &[Trajectory], include_prompts: bool) -> Result<TokenShares, AnalysisError> {
    TokenShares::from_totals(&corpus_totals(corpus, include_prompts))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub turns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    /// Quantile convention used for median and quartiles.
    pub method: &'static str,
}

/// Quantile at `p` over sorted data: position `p * (n - 1)`, averaging the
/// two neighbours when it falls between samples.
fn midpoint_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    (sorted[lo] + sorted[hi]) / 2.0
}

pub fn length_stats(runs: &[RunResult]) -> Result<LengthStats, AnalysisError> {
    if runs.is_empty() {
        return Err(AnalysisError::Validation("no runs".into()));
    }
    let mut xs: Vec<f64> = runs.iter().map(|r| r.turns as f64).collect();
    xs.sort_by(f64::total_cmp);
    Ok(LengthStats {
        n: xs.len(),
        mean: mean(&xs),
        median: midpoint_quantile(&xs, 0.5),
        q1: midpoint_quantile(&xs, 0.25),
        q3: midpoint_quantile(&xs, 0.75),
        min: xs[0],
        max: xs[xs.len() - 1],
        method: "midpoint",
    })
}

/// `mean(a) / mean(b) - 1`.
pub fn elongation_ratio(a: &LengthStats, b: &LengthStats) -> f64 {
    a.mean / b.mean - 1.0
}
