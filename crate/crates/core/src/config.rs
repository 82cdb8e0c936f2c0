//! Run configuration: a JSON document whose keys mirror the CLI flags.
//! Resolution order is flags, then file, then defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cost::{load_pricing_file, PricingModel};
use crate::simulator::{mean_token_stats, TokenStats, DEFAULT_SUMMARY_TOKENS};
use crate::strategy::{StrategyConfig, Variant};
use crate::summarizer::SummarizerSpec;
use crate::trajectory::{load_trajectory, TokenCount, Trajectory};

pub const DEFAULT_TURN_LIMIT: usize = 250;
pub const DEFAULT_MASK_WINDOW: usize = 10;
pub const DEFAULT_SUMMARY_ACCUM: usize = 21;
pub const DEFAULT_SUMMARY_TAIL: usize = 10;
pub const DEFAULT_HYBRID_ACCUM: usize = 43;
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const BUILTIN_PRICING_MODEL: &str = "default";

#[derive(Debug, thiserror::Error)]
#[error("config error in `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Raw,
    Masking,
    Summary,
    Hybrid,
}

impl StrategyKind {
    pub fn of(variant: &Variant) -> Self {
        match variant {
            Variant::Raw => StrategyKind::Raw,
            Variant::Masking { .. } => StrategyKind::Masking,
            Variant::Summary { .. } => StrategyKind::Summary,
            Variant::Hybrid { .. } => StrategyKind::Hybrid,
        }
    }

    pub fn default_variant(self) -> Variant {
        match self {
            StrategyKind::Raw => Variant::Raw,
            StrategyKind::Masking => Variant::Masking { window: DEFAULT_MASK_WINDOW },
            StrategyKind::Summary => Variant::Summary { accum: DEFAULT_SUMMARY_ACCUM, tail: DEFAULT_SUMMARY_TAIL },
            StrategyKind::Hybrid => Variant::Hybrid {
                accum: DEFAULT_HYBRID_ACCUM,
                tail: DEFAULT_SUMMARY_TAIL,
                mask_window: DEFAULT_MASK_WINDOW,
            },
        }
    }
}

/// Strategy hyperparameter overrides, typically from flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StrategyOverrides {
    pub kind: Option<StrategyKind>,
    pub window: Option<usize>,
    pub accum: Option<usize>,
    pub tail: Option<usize>,
    pub mask_window: Option<usize>,
}

impl StrategyOverrides {
    pub fn apply(&self, base: &StrategyConfig) -> Result<StrategyConfig, ConfigError> {
        let mut cfg = base.clone();
        if let Some(kind) = self.kind {
            if kind != StrategyKind::of(&cfg.variant) {
                cfg.variant = kind.default_variant();
            }
        }
        let name = cfg.variant.name();
        let only = |flag: &str, kinds: &str| {
            ConfigError::new(flag, format!("applies to {kinds} only, strategy is {name}"))
        };
        match &mut cfg.variant {
            Variant::Raw => {
                if self.window.is_some() {
                    return Err(only("window", "masking"));
                }
                if self.accum.is_some() || self.tail.is_some() {
                    return Err(only(if self.accum.is_some() { "accum" } else { "tail" }, "summary/hybrid"));
                }
                if self.mask_window.is_some() {
                    return Err(only("mask-window", "hybrid"));
                }
            }
            Variant::Masking { window } => {
                if let Some(w) = self.window {
                    *window = w;
                }
                if self.accum.is_some() || self.tail.is_some() {
                    return Err(only(if self.accum.is_some() { "accum" } else { "tail" }, "summary/hybrid"));
                }
                if self.mask_window.is_some() {
                    return Err(only("mask-window", "hybrid"));
                }
            }
            Variant::Summary { accum, tail } => {
                if self.window.is_some() {
                    return Err(only("window", "masking"));
                }
                if self.mask_window.is_some() {
                    return Err(only("mask-window", "hybrid"));
                }
                if let Some(n) = self.accum {
                    *accum = n;
                }
                if let Some(m) = self.tail {
                    *tail = m;
                }
            }
            Variant::Hybrid { accum, tail, mask_window } => {
                if self.window.is_some() {
                    return Err(only("window", "masking"));
                }
                if let Some(n) = self.accum {
                    *accum = n;
                }
                if let Some(m) = self.tail {
                    *tail = m;
                }
                if let Some(w) = self.mask_window {
                    *mask_window = w;
                }
            }
        }
        cfg.validate().map_err(|e| ConfigError::new("strategy", e.to_string()))?;
        Ok(cfg)
    }
}

/// The on-disk config document; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub strategy: Option<StrategyConfig>,
    /// Sweep grid; used by `sweep` only.
    pub grid: Option<Vec<StrategyConfig>>,
    pub pricing: Option<PathBuf>,
    pub model: Option<String>,
    /// Inline token statistics.
    pub stats: Option<TokenStats>,
    /// Token statistics from a file (see [`load_stats`]).
    pub stats_file: Option<PathBuf>,
    pub turns: Option<usize>,
    pub seed: Option<u64>,
    pub summarizer: Option<SummarizerSpec>,
    pub summary_tokens: Option<u64>,
    pub bootstrap: Option<usize>,
    pub level: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))
    }
}

/// Fully resolved configuration, echoed to `config_resolved.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub strategy: StrategyConfig,
    pub pricing_file: Option<PathBuf>,
    pub model: String,
    pub pricing: PricingModel,
    pub stats: TokenStats,
    pub turn_limit: usize,
    pub seed: u64,
    pub summarizer: SummarizerSpec,
    pub summary_tokens: TokenCount,
    pub out: PathBuf,
}

pub fn resolve_pricing(file: Option<&Path>, model: Option<&str>) -> Result<(String, PricingModel), ConfigError> {
    match file {
        Some(path) => {
            let pf = load_pricing_file(path).map_err(|e| ConfigError::new("pricing", format!("{}: {e}", path.display())))?;
            let name = match model {
                Some(m) => m.to_string(),
                None if pf.0.len() == 1 => pf.0.keys().next().cloned().expect("one model"),
                None => return Err(ConfigError::new("model", "pricing file defines several models; pick one")),
            };
            let m = pf.get(&name).map_err(|e| ConfigError::new("model", e.to_string()))?;
            Ok((name, m))
        }
        None => match model {
            None | Some(BUILTIN_PRICING_MODEL) => Ok((BUILTIN_PRICING_MODEL.to_string(), PricingModel::default())),
            Some(other) => Err(ConfigError::new("model", format!("`{other}` needs a --pricing file"))),
        },
    }
}

/// Token statistics from a JSON `TokenStats` file, a trajectory log
/// (`.jsonl`), or a directory of trajectory logs.
pub fn load_stats(path: &Path) -> Result<TokenStats, ConfigError> {
    let err = |m: String| ConfigError::new("stats", format!("{}: {m}", path.display()));
    let corpus: Vec<Trajectory> = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| err(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        files.iter().map(load_trajectory).collect::<Result<_, _>>().map_err(|e| err(e.to_string()))?
    } else if path.extension().is_some_and(|x| x == "jsonl") {
        vec![load_trajectory(path).map_err(|e| err(e.to_string()))?]
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        return serde_json::from_str(&text).map_err(|e| err(e.to_string()));
    };
    mean_token_stats(&corpus).map_err(|e| err(e.to_string()))
}

/// Flag values that participate in resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub strategy: StrategyOverrides,
    pub pricing: Option<PathBuf>,
    pub model: Option<String>,
    pub stats: Option<PathBuf>,
    pub turns: Option<usize>,
    pub seed: Option<u64>,
    pub summary_tokens: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(file: &ConfigFile, flags: &Overrides) -> Result<Self, ConfigError> {
        let base = file.strategy.clone().unwrap_or_else(StrategyConfig::raw);
        let strategy = flags.strategy.apply(&base)?;
        Self::resolve_with_strategy(file, flags, strategy)
    }

    pub fn resolve_with_strategy(
        file: &ConfigFile,
        flags: &Overrides,
        strategy: StrategyConfig,
    ) -> Result<Self, ConfigError> {
        let pricing_file = flags.pricing.clone().or_else(|| file.pricing.clone());
        let (model, pricing) = resolve_pricing(pricing_file.as_deref(), flags.model.as_deref().or(file.model.as_deref()))?;

        let stats = match (&flags.stats, &file.stats, &file.stats_file) {
            (Some(p), _, _) => load_stats(p)?,
            (None, Some(inline), _) => *inline,
            (None, None, Some(p)) => load_stats(p)?,
            (None, None, None) => TokenStats::default(),
        };

        let turn_limit = flags.turns.or(file.turns).unwrap_or(DEFAULT_TURN_LIMIT);
        if turn_limit == 0 {
            return Err(ConfigError::new("turns", "must be >= 1"));
        }
        let summary_tokens = flags.summary_tokens.or(file.summary_tokens).unwrap_or(DEFAULT_SUMMARY_TOKENS);
        let mut summarizer = file.summarizer.clone().unwrap_or_default();
        if let (Some(n), SummarizerSpec::Extractive { max_tokens }) = (flags.summary_tokens, &mut summarizer) {
            *max_tokens = TokenCount(n);
        }
        if let SummarizerSpec::Remote(r) = &summarizer {
            if r.endpoint.is_empty() {
                return Err(ConfigError::new("summarizer.endpoint", "must not be empty"));
            }
        }
        Ok(RunConfig {
            strategy,
            pricing_file,
            model,
            pricing,
            stats,
            turn_limit,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            summarizer,
            summary_tokens: TokenCount(summary_tokens),
            out: flags.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}
