//! Seeded random market models and strategies.
//!
//! Prices follow a multiplicative walk on the mid price with integer-percent
//! steps; bid and ask sit symmetrically around the mid at a relative spread.
//! All drawn quantities are exact rationals on a fixed grid, and the stream
//! comes from ChaCha8 so a seed produces the same model on every platform.

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::market::MarketModel;
use crate::rational::{int, ratio, Display as Q, Rational};
use crate::strategy::TradingStrategy;
use crate::tree::{AdaptedProcess, EventTree, NodeSpec, PredictableProcess};

/// Resolution of values drawn from a rational range.
const GRID: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorMode {
    /// Spreads and rate gaps drawn from the configured ranges.
    Unconstrained,
    /// Spreads and rate gaps are zero at about half the nodes and a tenth of
    /// the drawn value elsewhere, so both verdicts are common.
    ArbitrageProne,
    /// Spreads drawn between the configured maximum and three times it.
    WideSpread,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalRange {
    pub min: Rational,
    pub max: Rational,
}

impl RationalRange {
    pub fn new(min: Rational, max: Rational) -> Self {
        Self { min, max }
    }

    pub fn point(value: Rational) -> Self {
        Self::new(value.clone(), value)
    }

    fn sample(&self, rng: &mut impl Rng) -> Rational {
        let k = rng.gen_range(0..=GRID);
        &self.min + (&self.max - &self.min) * ratio(k, GRID)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub horizon: (usize, usize),
    pub branching: (usize, usize),
    pub initial_price: Rational,
    /// Largest one-period move of the mid price, in whole percent.
    pub max_step_percent: u32,
    /// Relative spread `(ask − bid) / mid`.
    pub spread: RationalRange,
    /// Deposit rate per period.
    pub deposit_rate: RationalRange,
    /// Credit rate minus deposit rate.
    pub rate_gap: RationalRange,
    pub mode: GeneratorMode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: (1, 3),
            branching: (1, 3),
            initial_price: int(100),
            max_step_percent: 20,
            spread: RationalRange::new(int(0), ratio(1, 20)),
            deposit_rate: RationalRange::new(int(0), ratio(1, 20)),
            rate_gap: RationalRange::new(int(0), ratio(1, 50)),
            mode: GeneratorMode::Unconstrained,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{name} range is empty ({min} > {max})")]
    EmptyRange {
        name: &'static str,
        min: String,
        max: String,
    },
    #[error("branching must be at least 1")]
    NoBranching,
    #[error("initial price must be positive")]
    NonPositivePrice,
    #[error("max step must be below 100 percent")]
    StepTooLarge,
    #[error("relative spread must lie in [0, 2), got up to {0}")]
    Spread(String),
    #[error("deposit rate must exceed -1, got {0}")]
    DepositRate(String),
    #[error("rate gap must be non-negative, got {0}")]
    RateGap(String),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ordered = |name, lo: String, hi: String, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::EmptyRange { name, min: lo, max: hi })
            }
        };
        let (h0, h1) = self.horizon;
        ordered("horizon", h0.to_string(), h1.to_string(), h0 <= h1)?;
        let (b0, b1) = self.branching;
        ordered("branching", b0.to_string(), b1.to_string(), b0 <= b1)?;
        if b0 == 0 {
            return Err(ConfigError::NoBranching);
        }
        for (name, r) in [
            ("spread", &self.spread),
            ("deposit rate", &self.deposit_rate),
            ("rate gap", &self.rate_gap),
        ] {
            ordered(name, Q(&r.min).to_string(), Q(&r.max).to_string(), r.min <= r.max)?;
        }
        if self.initial_price <= Rational::zero() {
            return Err(ConfigError::NonPositivePrice);
        }
        if self.max_step_percent >= 100 {
            return Err(ConfigError::StepTooLarge);
        }
        let widest = match self.mode {
            GeneratorMode::WideSpread => &self.spread.max * int(3),
            _ => self.spread.max.clone(),
        };
        if self.spread.min < Rational::zero() || widest >= int(2) {
            return Err(ConfigError::Spread(Q(&widest).to_string()));
        }
        if self.deposit_rate.min <= -Rational::one() {
            return Err(ConfigError::DepositRate(Q(&self.deposit_rate.min).to_string()));
        }
        if self.rate_gap.min < Rational::zero() {
            return Err(ConfigError::RateGap(Q(&self.rate_gap.min).to_string()));
        }
        Ok(())
    }
}

/// Nearest multiple of `1 / unit`, ties rounded up.
fn to_grid(x: &Rational, unit: i64) -> Rational {
    let scaled = x * int(unit) + ratio(1, 2);
    Rational::new(scaled.floor().to_integer(), unit.into())
}

/// Draws a model. Equal configurations give equal models.
///
/// Prices land on a cent grid and rates on a basis-point grid. Outside
/// arbitrage-prone mode, every node with two or more children has one child
/// at least half a maximal step above the rate-grown mid and one at least half
/// a step below it, and a single child continues at the rate-grown mid.
pub fn generate(config: &GeneratorConfig) -> Result<MarketModel, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let horizon = rng.gen_range(config.horizon.0..=config.horizon.1);
    let prone = config.mode == GeneratorMode::ArbitrageProne;
    let tenth = ratio(1, 10);
    let shrink = |rng: &mut ChaCha8Rng, v: Rational| {
        if !prone {
            v
        } else if rng.gen_bool(0.5) {
            Rational::zero()
        } else {
            v * &tenth
        }
    };
    let cent = ratio(1, 100);

    let mut specs = vec![NodeSpec {
        parent: None,
        prob: Rational::one(),
    }];
    let mut mids = vec![to_grid(&config.initial_price, 100).max(cent.clone())];
    let mut deposit = vec![None];
    let mut credit = vec![None];
    let mut level = vec![0usize];
    let step = config.max_step_percent as i64;
    for _ in 0..horizon {
        let mut next = Vec::new();
        for &parent in &level {
            let d = to_grid(&config.deposit_rate.sample(&mut rng), 10_000);
            let gap = config.rate_gap.sample(&mut rng);
            let gap = to_grid(&shrink(&mut rng, gap), 10_000);
            let grown = &mids[parent] * (Rational::one() + &d);
            credit[parent] = Some(&d + gap);
            deposit[parent] = Some(d);

            let k = rng.gen_range(config.branching.0..=config.branching.1);
            let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
            let total: i64 = weights.iter().sum();
            for (i, w) in weights.into_iter().enumerate() {
                let pct = match (prone, k, i) {
                    (false, 1, _) => 0,
                    (false, _, 0) => rng.gen_range((step + 1) / 2..=step),
                    (false, _, 1) => -rng.gen_range((step + 1) / 2..=step),
                    _ => rng.gen_range(-step..=step),
                };
                let mid = to_grid(&(&grown * ratio(100 + pct, 100)), 100).max(cent.clone());
                next.push(specs.len());
                specs.push(NodeSpec {
                    parent: Some(parent),
                    prob: ratio(w, total),
                });
                mids.push(mid);
                deposit.push(None);
                credit.push(None);
            }
        }
        level = next;
    }
    let tree = EventTree::new(specs).expect("generated tree is well formed");

    let wide = RationalRange::new(config.spread.max.clone(), &config.spread.max * int(3));
    let mut bid = Vec::with_capacity(tree.len());
    let mut ask = Vec::with_capacity(tree.len());
    for mid in &mids {
        let s = match config.mode {
            GeneratorMode::WideSpread => wide.sample(&mut rng),
            _ => {
                let s = config.spread.sample(&mut rng);
                shrink(&mut rng, s)
            }
        };
        // round the half spread up so the realized spread never drops below s
        let half = (mid * &s * int(50)).ceil() / int(100);
        bid.push((mid - &half).max(cent.clone()));
        ask.push(mid + half);
    }
    let bid = AdaptedProcess::new(&tree, bid).expect("one value per node");
    let ask = AdaptedProcess::new(&tree, ask).expect("one value per node");
    let deposit = PredictableProcess::new(&tree, Rational::zero(), deposit).expect("rates on non-terminal nodes");
    let credit = PredictableProcess::new(&tree, Rational::zero(), credit).expect("rates on non-terminal nodes");
    Ok(MarketModel::new(tree, bid, ask, deposit, credit).expect("generated model is valid"))
}

/// A random self-financing strategy: random initial cash and stock targets in
/// quarter shares, the largest affordable cash position at each node, minus
/// a random non-negative consumption when `consume` is set.
pub fn random_strategy(model: &MarketModel, rng: &mut impl Rng, consume: bool) -> TradingStrategy {
    let tree = model.tree();
    let initial_cash = ratio(rng.gen_range(-400..=400), 4);
    let shares: Vec<Rational> = tree.node_ids().map(|_| ratio(rng.gen_range(-12..=12), 4)).collect();
    let consumption: Vec<Rational> = tree
        .node_ids()
        .map(|_| {
            if consume && rng.gen_bool(0.3) {
                ratio(rng.gen_range(1..=20), 4)
            } else {
                Rational::zero()
            }
        })
        .collect();
    TradingStrategy::rebalanced(model, initial_cash, &shares, &consumption).expect("lengths match the tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::is_self_financing;

    #[test]
    fn fixed_shape_model() {
        let config = GeneratorConfig {
            seed: 1,
            horizon: (2, 2),
            branching: (2, 2),
            ..GeneratorConfig::default()
        };
        let m = generate(&config).unwrap();
        assert_eq!(m.tree().len(), 7);
        assert_eq!(generate(&config).unwrap(), m);
    }

    #[test]
    fn wide_spread_respects_minimum() {
        let config = GeneratorConfig {
            seed: 5,
            horizon: (3, 3),
            spread: RationalRange::new(ratio(1, 50), ratio(1, 10)),
            mode: GeneratorMode::WideSpread,
            ..GeneratorConfig::default()
        };
        let m = generate(&config).unwrap();
        for n in m.tree().node_ids() {
            let mid = (m.bid(n) + m.ask(n)) / int(2);
            assert!((m.ask(n) - m.bid(n)) / mid >= config.spread.max);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = GeneratorConfig {
            horizon: (3, 2),
            ..GeneratorConfig::default()
        };
        assert!(matches!(bad.validate(), Err(ConfigError::EmptyRange { .. })));
        let bad = GeneratorConfig {
            branching: (0, 2),
            ..GeneratorConfig::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::NoBranching));
    }

    #[test]
    fn random_strategies_are_self_financing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..20 {
            let m = generate(&GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            })
            .unwrap();
            for consume in [false, true] {
                let s = random_strategy(&m, &mut rng, consume);
                assert!(is_self_financing(&m, &s).unwrap());
            }
        }
    }
}
