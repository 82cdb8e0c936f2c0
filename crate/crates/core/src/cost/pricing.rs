use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CostError;
use crate::trajectory::TokenCount;

const PICO_PER_MICRO: u64 = 1_000_000;
const PICO_PER_UNIT: u64 = 1_000_000_000_000;

/// Exact currency amount in units of 10^-12.
///
/// A token count multiplied by a [`Rate`] lands exactly on this grid, so
/// ledger sums are reproducible everywhere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    /// Rounded to the nearest micro-unit, halves up.
    pub fn micros(self) -> u64 {
        (self.0 + PICO_PER_MICRO / 2) / PICO_PER_MICRO
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / PICO_PER_UNIT as f64
    }
}

impl fmt::Display for Money {
    /// Exact decimal, trailing zeros trimmed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / PICO_PER_UNIT;
        let frac = self.0 % PICO_PER_UNIT;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let digits = format!("{frac:012}");
        write!(f, "{whole}.{}", digits.trim_end_matches('0'))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

/// Price of one million tokens, stored in micro-currency units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(pub u64);

impl Rate {
    pub fn per_mtok(currency: f64) -> Result<Rate, CostError> {
        if !currency.is_finite() || currency < 0.0 {
            return Err(CostError::Pricing(format!("rate {currency} must be a finite non-negative number")));
        }
        Ok(Rate((currency * 1e6).round() as u64))
    }

    pub fn as_per_mtok(self) -> f64 {
        self.0 as f64 / 1e6
    }

    fn cost(self, tokens: TokenCount) -> Money {
        Money(tokens.0 * self.0)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_per_mtok())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Rate::per_mtok(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PricingModel {
    pub input_miss_per_mtok: Rate,
    pub input_hit_per_mtok: Rate,
    pub output_per_mtok: Rate,
    #[serde(default = "yes")]
    pub cache_distinguished: bool,
}

fn yes() -> bool {
    true
}

impl Default for PricingModel {
    /// Cache hits ten times cheaper than misses.
    fn default() -> Self {
        PricingModel {
            input_miss_per_mtok: Rate(1_000_000),
            input_hit_per_mtok: Rate(100_000),
            output_per_mtok: Rate(5_000_000),
            cache_distinguished: true,
        }
    }
}

impl PricingModel {
    pub fn new(miss: f64, hit: f64, output: f64, cache_distinguished: bool) -> Result<Self, CostError> {
        let m = PricingModel {
            input_miss_per_mtok: Rate::per_mtok(miss)?,
            input_hit_per_mtok: Rate::per_mtok(hit)?,
            output_per_mtok: Rate::per_mtok(output)?,
            cache_distinguished,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.cache_distinguished && self.input_hit_per_mtok > self.input_miss_per_mtok {
            return Err(CostError::Pricing("cache-hit rate exceeds cache-miss rate".into()));
        }
        Ok(())
    }

    /// Rate applied to cache-hit tokens.
    pub fn effective_hit_rate(&self) -> Rate {
        if self.cache_distinguished {
            self.input_hit_per_mtok
        } else {
            self.input_miss_per_mtok
        }
    }

    pub fn price(&self, hit: TokenCount, miss: TokenCount, output: TokenCount) -> Money {
        self.effective_hit_rate().cost(hit) + self.input_miss_per_mtok.cost(miss) + self.output_per_mtok.cost(output)
    }
}

/// Prices one call from signed counts, rejecting negatives.
pub fn price_call(hit: i64, miss: i64, output: i64, pricing: &PricingModel) -> Result<Money, CostError> {
    let conv = |v: i64| if v < 0 { Err(CostError::NegativeCount(v)) } else { Ok(TokenCount(v as u64)) };
    Ok(pricing.price(conv(hit)?, conv(miss)?, conv(output)?))
}

/// Named pricing models.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PricingFile(pub BTreeMap<String, PricingModel>);

impl PricingFile {
    pub fn get(&self, name: &str) -> Result<PricingModel, CostError> {
        self.0.get(name).copied().ok_or_else(|| CostError::UnknownModel(name.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self, CostError> {
        let file: PricingFile = serde_json::from_str(s)?;
        for (name, model) in &file.0 {
            model.validate().map_err(|e| CostError::Pricing(format!("{name}: {e}")))?;
        }
        Ok(file)
    }
}

pub fn load_pricing_file(path: impl AsRef<Path>) -> Result<PricingFile, CostError> {
    PricingFile::from_json(&std::fs::read_to_string(path)?)
}
