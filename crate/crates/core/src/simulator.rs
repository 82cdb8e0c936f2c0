//! Synthetic trajectories built from mean per-type token counts, and the
//! per-turn context/cost curves obtained by running strategies over them.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{ledger_report, CostError, CostLedger, Money, PricingModel};
use crate::run::{config_fingerprint, CurvePoint, RunDriver, RunError};
use crate::strategy::{StrategyConfig, SummaryEvent};
use crate::summarizer::{PromptTemplate, Summarizer, SummarizerError, SummaryInput, SummaryOutput};
use crate::trajectory::{Segment, TokenCount, Trajectory, Turn};

pub const DEFAULT_SUMMARY_TOKENS: u64 = 1024;

/// Mean tokens per segment type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenStats {
    pub reasoning: TokenCount,
    pub action: TokenCount,
    pub observation: TokenCount,
    pub system: TokenCount,
    pub user: TokenCount,
}

impl Default for TokenStats {
    /// An 84% observation share: (150, 50, 1050) per turn.
    fn default() -> Self {
        TokenStats {
            reasoning: TokenCount(150),
            action: TokenCount(50),
            observation: TokenCount(1050),
            system: TokenCount(2000),
            user: TokenCount(500),
        }
    }
}

impl TokenStats {
    pub fn turn_tokens(&self) -> TokenCount {
        self.reasoning + self.action + self.observation
    }

    pub fn prompt_tokens(&self) -> TokenCount {
        self.system + self.user
    }

    /// Observation share of a turn as `(numerator, denominator)`.
    pub fn observation_share(&self) -> (u64, u64) {
        (self.observation.0, self.turn_tokens().0)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("corpus contains no turns")]
    EmptyCorpus,
    #[error("turn count must be >= 1")]
    NoTurns,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Run(#[from] RunError),
}

fn div_round(sum: u64, n: u64) -> TokenCount {
    TokenCount((sum + n / 2) / n)
}

/// Micro-averaged means over every turn of every trajectory. Prompt means
/// are averaged per trajectory. Means are rounded to the nearest token.
pub fn mean_token_stats(corpus: &[Trajectory]) -> Result<TokenStats, SimError> {
    let total_turns: u64 = corpus.iter().map(|t| t.turns.len() as u64).sum();
    if total_turns == 0 {
        return Err(SimError::EmptyCorpus);
    }
    let (mut r, mut a, mut o) = (0u64, 0u64, 0u64);
    for turn in corpus.iter().flat_map(|t| &t.turns) {
        r += turn.reasoning.tokens.0;
        a += turn.action.tokens.0;
        o += turn.observation.tokens.0;
    }
    let n = corpus.len() as u64;
    Ok(TokenStats {
        reasoning: div_round(r, total_turns),
        action: div_round(a, total_turns),
        observation: div_round(o, total_turns),
        system: div_round(corpus.iter().map(|t| t.system_prompt.tokens.0).sum(), n),
        user: div_round(corpus.iter().map(|t| t.user_prompt.tokens.0).sum(), n),
    })
}

/// A turn carrying the mean counts with empty placeholder text.
pub fn make_sim_turn(stats: &TokenStats, index: usize) -> Turn {
    Turn::new(
        index,
        Segment { text: String::new(), tokens: stats.reasoning },
        Segment { text: String::new(), tokens: stats.action },
        Segment { text: String::new(), tokens: stats.observation },
    )
}

/// Optional multiplicative noise on each simulated segment, uniform in
/// `[1 - fraction, 1 + fraction]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Fixed length of every simulated summary.
    pub summary_tokens: TokenCount,
    pub jitter: Option<Jitter>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { summary_tokens: TokenCount(DEFAULT_SUMMARY_TOKENS), jitter: None }
    }
}

pub fn sim_trajectory(stats: &TokenStats, turns: usize, jitter: Option<Jitter>) -> Trajectory {
    let mut traj = Trajectory::new(
        "sim",
        Segment { text: String::new(), tokens: stats.system },
        Segment { text: String::new(), tokens: stats.user },
    );
    let mut rng = jitter.map(|j| (j.fraction, ChaCha8Rng::seed_from_u64(j.seed)));
    for i in 1..=turns {
        let mut turn = make_sim_turn(stats, i);
        if let Some((f, rng)) = rng.as_mut() {
            for seg in [&mut turn.reasoning, &mut turn.action, &mut turn.observation] {
                let scale: f64 = rng.gen_range(1.0 - *f..=1.0 + *f);
                seg.tokens = TokenCount((seg.tokens.0 as f64 * scale).round().max(0.0) as u64);
            }
        }
        traj.turns.push(turn);
    }
    traj
}

/// Emits summaries of a fixed length. Its instruction is the bundled
/// summary prompt, so instruction tokens match the real template.
pub struct FixedLengthSummarizer {
    tokens: TokenCount,
    instruction: String,
    instruction_tokens: TokenCount,
}

impl FixedLengthSummarizer {
    pub fn new(tokens: TokenCount) -> Self {
        let tpl = PromptTemplate::summary_default();
        let instruction_tokens = crate::summarizer::heuristic_tokens(&tpl.system_text);
        FixedLengthSummarizer { tokens, instruction: tpl.system_text, instruction_tokens }
    }
}

impl Summarizer for FixedLengthSummarizer {
    fn summarize(&self, input: &SummaryInput) -> Result<SummaryOutput, SummarizerError> {
        input.validate()?;
        Ok(SummaryOutput::new(Segment { text: String::new(), tokens: self.tokens }))
    }

    fn instruction_tokens(&self) -> TokenCount {
        self.instruction_tokens
    }

    fn instruction_text(&self) -> &str {
        &self.instruction
    }
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub config: StrategyConfig,
    pub points: Vec<CurvePoint>,
    pub ledger: CostLedger,
    pub events: Vec<SummaryEvent>,
}

impl SimRun {
    pub fn max_context(&self) -> TokenCount {
        self.points.iter().map(|p| p.context_tokens).max().unwrap_or_default()
    }

    pub fn mean_context(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.iter().map(|p| p.context_tokens.0 as f64).sum::<f64>() / self.points.len() as f64
    }

    pub fn cumulative_cost(&self) -> Money {
        self.points.last().map_or(Money::ZERO, |p| p.cumulative_cost)
    }

    /// Input tokens over every call, agent and summary.
    pub fn input_tokens(&self) -> TokenCount {
        ledger_report(&self.ledger).input_tokens
    }

    pub fn agent_input_tokens(&self) -> TokenCount {
        self.points.iter().map(|p| p.input_hit + p.input_miss).sum()
    }
}

/// Runs `cfg` over a simulated trajectory for `turns` agent calls.
pub fn simulate_run(
    stats: &TokenStats,
    cfg: &StrategyConfig,
    turns: usize,
    pricing: &PricingModel,
    opts: &SimOptions,
) -> Result<SimRun, SimError> {
    if turns == 0 {
        return Err(SimError::NoTurns);
    }
    let traj = sim_trajectory(stats, turns, opts.jitter);
    let summarizer = FixedLengthSummarizer::new(opts.summary_tokens);
    let mut driver = RunDriver::new(&traj, cfg.clone(), *pricing, &summarizer)?;
    driver.run_until(None)?;
    let ck = driver.into_checkpoint();
    Ok(SimRun { config: cfg.clone(), points: ck.points, ledger: ck.ledger, events: ck.state.events })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub config: StrategyConfig,
    pub cumulative_cost: Money,
    pub max_context: TokenCount,
    pub mean_context: f64,
    pub input_tokens: TokenCount,
    pub summary_calls: usize,
}

impl SweepRow {
    pub fn from_run(run: &SimRun) -> Self {
        SweepRow {
            config: run.config.clone(),
            cumulative_cost: run.cumulative_cost(),
            max_context: run.max_context(),
            mean_context: run.mean_context(),
            input_tokens: run.input_tokens(),
            summary_calls: run.events.len(),
        }
    }
}

/// One row per config, in grid order. Runs execute in parallel.
pub fn sweep(
    grid: &[StrategyConfig],
    stats: &TokenStats,
    turns: usize,
    pricing: &PricingModel,
    opts: &SimOptions,
) -> Result<Vec<SweepRow>, SimError> {
    if grid.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    grid.par_iter()
        .map(|cfg| simulate_run(stats, cfg, turns, pricing, opts).map(|r| SweepRow::from_run(&r)))
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), CostError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "strategy",
        "config_fingerprint",
        "cumulative_cost",
        "max_context",
        "mean_context",
        "input_tokens",
        "summary_calls",
    ])?;
    for r in rows {
        w.write_record([
            r.config.label(),
            config_fingerprint(&r.config),
            r.cumulative_cost.to_string(),
            r.max_context.to_string(),
            format!("{:.3}", r.mean_context),
            r.input_tokens.to_string(),
            r.summary_calls.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
