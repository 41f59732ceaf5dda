//! Trading strategies in cash and stock, self-financing checks and arbitrage
//! classification.
//!
//! A strategy is stored as its initial cash outlay `α_0` plus, for every node
//! ν, the portfolio `(α_{t+1}(ν), β_{t+1}(ν))` chosen at ν. On terminal nodes
//! that portfolio is the final one, `(α_{T+1}, β_{T+1})`. The stock position
//! before the first trade is always zero.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{liquidation_raw, MarketModel};
use crate::rational::{serde_str, Display as Q, Rational};
use crate::tree::{NodeId, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("strategy has {got} portfolios but the tree has {expected} nodes")]
    Dimension { expected: usize, got: usize },
    #[error("strategies belong to trees of different sizes ({left} vs {right})")]
    TreeMismatch { left: usize, right: usize },
    #[error("cone weights must be non-negative, got {0}")]
    NegativeWeight(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Portfolio {
    #[serde(with = "serde_str")]
    pub cash: Rational,
    #[serde(with = "serde_str")]
    pub shares: Rational,
}

impl Portfolio {
    pub fn new(cash: Rational, shares: Rational) -> Self {
        Self { cash, shares }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingStrategy {
    pub initial_cash: Rational,
    pub holdings: Vec<Portfolio>,
}

/// One of the four `(rate, price)` corners at which a rebalancing is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    CreditAsk,
    CreditBid,
    DepositAsk,
    DepositBid,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::CreditAsk,
        Corner::CreditBid,
        Corner::DepositAsk,
        Corner::DepositBid,
    ];
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::CreditAsk => "(credit, ask)",
            Corner::CreditBid => "(credit, bid)",
            Corner::DepositAsk => "(deposit, ask)",
            Corner::DepositBid => "(deposit, bid)",
        })
    }
}

/// A rebalancing at `node` that fails the self-financing test at `corner`;
/// `slack` is the (negative) left-hand side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfFinancingViolation {
    pub node: NodeId,
    pub corner: Corner,
    pub slack: Rational,
}

impl fmt::Display for SelfFinancingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at corner {}: slack {}", self.node, self.corner, Q(&self.slack))
    }
}

/// Outcome of testing a strategy against the definition of arbitrage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArbitrageCheck {
    Arbitrage { witness: NodeId, payoff: Rational },
    NotSelfFinancing(Vec<SelfFinancingViolation>),
    PositiveInitialCost(Rational),
    NegativePayoff { node: NodeId, payoff: Rational },
    NoStrictProfit,
}

impl ArbitrageCheck {
    pub fn is_arbitrage(&self) -> bool {
        matches!(self, ArbitrageCheck::Arbitrage { .. })
    }
}

impl TradingStrategy {
    pub fn zero(model: &MarketModel) -> Self {
        Self {
            initial_cash: Rational::zero(),
            holdings: vec![Portfolio::default(); model.tree().len()],
        }
    }

    /// Portfolio held over the period ending at `node`: the parent's choice,
    /// or `(α_0, 0)` at the root.
    pub fn held_into(&self, model: &MarketModel, node: NodeId) -> Portfolio {
        match model.tree().parent(node) {
            Some(p) => self.holdings[p.0].clone(),
            None => Portfolio::new(self.initial_cash.clone(), Rational::zero()),
        }
    }

    pub fn chosen(&self, node: NodeId) -> &Portfolio {
        &self.holdings[node.0]
    }

    fn check_dims(&self, model: &MarketModel) -> Result<(), StrategyError> {
        if self.holdings.len() != model.tree().len() {
            return Err(StrategyError::Dimension {
                expected: model.tree().len(),
                got: self.holdings.len(),
            });
        }
        Ok(())
    }

    /// Self-financing strategy obtained by trading to the given stock
    /// positions at each node and consuming the given cash amounts.
    ///
    /// At each node the cash position is the largest one affordable after the
    /// trade, `ϑ_t(ϱ_t(α_t), β_t − β_{t+1})`, minus that node's consumption.
    pub fn rebalanced(
        model: &MarketModel,
        initial_cash: Rational,
        shares: &[Rational],
        consumption: &[Rational],
    ) -> Result<Self, StrategyError> {
        let n = model.tree().len();
        for len in [shares.len(), consumption.len()] {
            if len != n {
                return Err(StrategyError::Dimension { expected: n, got: len });
            }
        }
        let mut s = Self {
            initial_cash,
            holdings: vec![Portfolio::default(); n],
        };
        for node in model.tree().node_ids() {
            let held = s.held_into(model, node);
            let cash = model.accrue_into(node, &held.cash);
            let sold = &held.shares - &shares[node.0];
            let after = liquidation_raw(model.bid(node), model.ask(node), &cash, &sold);
            s.holdings[node.0] = Portfolio::new(after - &consumption[node.0], shares[node.0].clone());
        }
        Ok(s)
    }

    /// Copy of the strategy whose final portfolios follow the liquidation
    /// convention: all stock unwound, `β_{T+1} = 0`.
    pub fn with_liquidation(&self, model: &MarketModel) -> Result<Self, StrategyError> {
        let payoffs = liquidate(model, self)?;
        let mut out = self.clone();
        for (node, value) in payoffs {
            out.holdings[node.0] = Portfolio::new(value, Rational::zero());
        }
        Ok(out)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self {
            initial_cash: &self.initial_cash * factor,
            holdings: self
                .holdings
                .iter()
                .map(|p| Portfolio::new(&p.cash * factor, &p.shares * factor))
                .collect(),
        }
    }
}

/// Every failed corner inequality `α_t R + β_t x − α_{t+1} − β_{t+1} x ≥ 0`,
/// including the first trade out of `(α_0, 0)` and the change into the
/// final portfolio at each terminal node.
pub fn self_financing_violations(
    model: &MarketModel,
    s: &TradingStrategy,
) -> Result<Vec<SelfFinancingViolation>, StrategyError> {
    s.check_dims(model)?;
    let mut out = Vec::new();
    for node in model.tree().node_ids() {
        let held = s.held_into(model, node);
        let next = s.chosen(node);
        let dshares = &held.shares - &next.shares;
        for (corner, (r, x)) in Corner::ALL.into_iter().zip(model.corners(node)) {
            let slack = &held.cash * r - &next.cash + &dshares * x;
            if slack.is_negative() {
                out.push(SelfFinancingViolation { node, corner, slack });
            }
        }
    }
    Ok(out)
}

pub fn is_self_financing(model: &MarketModel, s: &TradingStrategy) -> Result<bool, StrategyError> {
    Ok(self_financing_violations(model, s)?.is_empty())
}

/// Terminal cash from accruing the last cash position and unwinding the last
/// stock position, `ϑ_T(ϱ_T(α_T), β_T)`, for every terminal node.
pub fn liquidate(model: &MarketModel, s: &TradingStrategy) -> Result<Vec<(NodeId, Rational)>, StrategyError> {
    s.check_dims(model)?;
    Ok(model
        .tree()
        .terminals()
        .map(|w| {
            let held = s.held_into(model, w);
            let cash = model.accrue_into(w, &held.cash);
            (w, model.liquidation_value_at(w, &cash, &held.shares))
        })
        .collect())
}

/// Liquidation value of the final portfolio at every terminal node.
pub fn terminal_values(model: &MarketModel, s: &TradingStrategy) -> Result<Vec<(NodeId, Rational)>, StrategyError> {
    s.check_dims(model)?;
    Ok(model
        .tree()
        .terminals()
        .map(|w| {
            let p = s.chosen(w);
            (w, model.liquidation_value_at(w, &p.cash, &p.shares))
        })
        .collect())
}

/// Tests the arbitrage definition: self-financing, no initial outlay,
/// non-negative terminal value everywhere and strictly positive somewhere.
///
/// Every scenario has positive reference probability, so "positive with
/// positive probability" reduces to the existence of one such terminal node.
pub fn is_arbitrage(model: &MarketModel, s: &TradingStrategy) -> Result<ArbitrageCheck, StrategyError> {
    let violations = self_financing_violations(model, s)?;
    if !violations.is_empty() {
        return Ok(ArbitrageCheck::NotSelfFinancing(violations));
    }
    if s.initial_cash.is_positive() {
        return Ok(ArbitrageCheck::PositiveInitialCost(s.initial_cash.clone()));
    }
    let values = terminal_values(model, s)?;
    if let Some((node, payoff)) = values.iter().find(|(_, v)| v.is_negative()) {
        return Ok(ArbitrageCheck::NegativePayoff {
            node: *node,
            payoff: payoff.clone(),
        });
    }
    Ok(match values.into_iter().find(|(_, v)| v.is_positive()) {
        Some((witness, payoff)) => ArbitrageCheck::Arbitrage { witness, payoff },
        None => ArbitrageCheck::NoStrictProfit,
    })
}

/// `λ1·s1 + λ2·s2` for non-negative weights.
pub fn cone_combine(
    s1: &TradingStrategy,
    s2: &TradingStrategy,
    l1: &Rational,
    l2: &Rational,
) -> Result<TradingStrategy, StrategyError> {
    if s1.holdings.len() != s2.holdings.len() {
        return Err(StrategyError::TreeMismatch {
            left: s1.holdings.len(),
            right: s2.holdings.len(),
        });
    }
    for l in [l1, l2] {
        if l.is_negative() {
            return Err(StrategyError::NegativeWeight(Q(l).to_string()));
        }
    }
    Ok(TradingStrategy {
        initial_cash: l1 * &s1.initial_cash + l2 * &s2.initial_cash,
        holdings: s1
            .holdings
            .iter()
            .zip(&s2.holdings)
            .map(|(a, b)| Portfolio::new(l1 * &a.cash + l2 * &b.cash, l1 * &a.shares + l2 * &b.shares))
            .collect(),
    })
}

/// A strategy with explicit consumption: at each node the agent starts from
/// `(ϱ_t(α_t), β_t)`, consumes down to `(γ_t, δ_t)`, then trades into the
/// next portfolio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedStrategy {
    pub strategy: TradingStrategy,
    pub gamma: Vec<Rational>,
    pub delta: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneralizedCondition {
    /// `ϱ_t(α_t) ≥ γ_t`
    CashConsumption,
    /// `β_t ≥ δ_t`
    StockConsumption,
    /// `ϑ_t(γ_t − α_{t+1}, δ_t − β_{t+1}) ≥ 0`
    Rebalancing,
}

impl GeneralizedStrategy {
    fn check_dims(&self, model: &MarketModel) -> Result<(), StrategyError> {
        self.strategy.check_dims(model)?;
        for v in [&self.gamma, &self.delta] {
            if v.len() != model.tree().len() {
                return Err(StrategyError::Dimension {
                    expected: model.tree().len(),
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    pub fn violations(&self, model: &MarketModel) -> Result<Vec<(NodeId, GeneralizedCondition)>, StrategyError> {
        self.check_dims(model)?;
        let mut out = Vec::new();
        for node in model.tree().node_ids() {
            let held = self.strategy.held_into(model, node);
            let next = self.strategy.chosen(node);
            let (gamma, delta) = (&self.gamma[node.0], &self.delta[node.0]);
            if model.accrue_into(node, &held.cash) < *gamma {
                out.push((node, GeneralizedCondition::CashConsumption));
            }
            if held.shares < *delta {
                out.push((node, GeneralizedCondition::StockConsumption));
            }
            let lv = model.liquidation_value_at(node, &(gamma - &next.cash), &(delta - &next.shares));
            if lv.is_negative() {
                out.push((node, GeneralizedCondition::Rebalancing));
            }
        }
        Ok(out)
    }

    /// The consumption-free strategy `(ε, η)` with the same stock positions
    /// and the same initial outlay. It holds at least as much cash as the
    /// original at every node.
    pub fn to_self_financing(&self, model: &MarketModel) -> Result<TradingStrategy, StrategyError> {
        self.check_dims(model)?;
        let shares: Vec<Rational> = self.strategy.holdings.iter().map(|p| p.shares.clone()).collect();
        let zero = vec![Rational::zero(); shares.len()];
        TradingStrategy::rebalanced(model, self.strategy.initial_cash.clone(), &shares, &zero)
    }
}
