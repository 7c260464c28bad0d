//! Query-selection strategies, registered by name.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::evoi::{ComparisonQuery, EvoiContext};
use crate::model::FactorId;

/// What the strategy asks next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    /// Binary comparison against a local gamble with probability `threshold`.
    Comparison(ComparisonQuery),
    /// Direct assessment of one local value.
    Direct { factor: FactorId, config: usize },
}

pub trait QueryStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Next query, or `None` when nothing is left to ask.
    fn select(&self, ctx: &EvoiContext<'_>, rng: &mut dyn RngCore) -> Option<Query>;
}

fn uncertain(ctx: &EvoiContext<'_>) -> Vec<(FactorId, usize, f64)> {
    ctx.beliefs
        .entries()
        .filter_map(|(j, c, b)| match b {
            Belief::Mixture { mixture } => Some((j, c, mixture.mean())),
            Belief::Known { .. } => None,
        })
        .collect()
}

/// Uniformly random uncertain parameter, threshold at its current mean.
#[derive(Debug, Default)]
pub struct RandomStrategy;

impl QueryStrategy for RandomStrategy {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&self, ctx: &EvoiContext<'_>, rng: &mut dyn RngCore) -> Option<Query> {
        let params = uncertain(ctx);
        if params.is_empty() {
            return None;
        }
        let (factor, config, mean) = params[rng.random_range(0..params.len())];
        Some(Query::Comparison(ComparisonQuery { factor, config, threshold: mean }))
    }
}

/// Myopically optimal query; random query when no query has positive EVOI
/// and `fallback` is set.
#[derive(Debug)]
pub struct EvoiStrategy {
    pub fallback: bool,
}

impl Default for EvoiStrategy {
    fn default() -> Self {
        EvoiStrategy { fallback: true }
    }
}

impl QueryStrategy for EvoiStrategy {
    fn name(&self) -> &str {
        "evoi"
    }

    fn select(&self, ctx: &EvoiContext<'_>, rng: &mut dyn RngCore) -> Option<Query> {
        match ctx.best_local_query() {
            Some(e) => Some(Query::Comparison(e.query)),
            None if self.fallback => RandomStrategy.select(ctx, rng),
            None => None,
        }
    }
}

/// Reveals uncertain parameters one at a time, in factor and configuration
/// order.
#[derive(Debug, Default)]
pub struct DirectStrategy;

impl QueryStrategy for DirectStrategy {
    fn name(&self) -> &str {
        "direct"
    }

    fn select(&self, ctx: &EvoiContext<'_>, _rng: &mut dyn RngCore) -> Option<Query> {
        uncertain(ctx).first().map(|&(factor, config, _)| Query::Direct { factor, config })
    }
}

pub struct StrategyRegistry {
    strategies: BTreeMap<String, Box<dyn QueryStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { strategies: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(EvoiStrategy::default()));
        r.register(Box::new(RandomStrategy));
        r.register(Box::new(DirectStrategy));
        r
    }

    /// Adds or replaces a strategy under its own name.
    pub fn register(&mut self, s: Box<dyn QueryStrategy>) {
        self.strategies.insert(s.name().to_string(), s);
    }

    pub fn get(&self, name: &str) -> Option<&dyn QueryStrategy> {
        self.strategies.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&str> {
        self.strategies.keys().map(String::as_str).collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
