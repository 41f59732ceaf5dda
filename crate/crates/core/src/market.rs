//! Bid/ask stock prices and deposit/credit interest rates on an event tree.
//!
//! Rates are simple per-period rates. The rate for the period `(t, t+1]` is
//! stored on the time-`t` node, and the time-0 rates are fixed at zero so
//! every deflator starts at `B_0 = 1`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{negative_part, positive_part, Display as Q, Rational};
use crate::tree::{AdaptedProcess, EventTree, NodeId, PredictableProcess, TreeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("model violates {} market constraint(s): {}", .0.len(), join(.0))]
    Invalid(Vec<Violation>),
    #[error("rate ordering violated: need credit factor {credit} >= deposit factor {deposit} > 0")]
    RateOrdering { deposit: String, credit: String },
    #[error("price ordering violated: need ask {ask} >= bid {bid} > 0")]
    PriceOrdering { bid: String, ask: String },
    #[error("{node}: growth factor {value} is not strictly positive")]
    NonPositiveFactor { node: NodeId, value: String },
    #[error("time-0 growth factor {0} is not strictly positive")]
    NonPositiveInitialFactor(String),
}

fn join(vs: &[Violation]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// A broken market constraint at one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Bid price must be strictly positive.
    NonPositiveBid(Rational),
    /// Ask must be at least the bid.
    AskBelowBid { bid: Rational, ask: Rational },
    /// Deposit rate must exceed -1.
    DepositRateTooLow(Rational),
    /// Credit rate must be at least the deposit rate.
    CreditBelowDeposit { deposit: Rational, credit: Rational },
    /// Time-0 rates must be zero.
    NonZeroInitialRate { deposit: Rational, credit: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.node;
        match &self.kind {
            ViolationKind::NonPositiveBid(b) => write!(f, "{n}: bid {} is not positive", Q(b)),
            ViolationKind::AskBelowBid { bid, ask } => {
                write!(f, "{n}: ask {} is below bid {}", Q(ask), Q(bid))
            }
            ViolationKind::DepositRateTooLow(r) => {
                write!(f, "{n}: deposit rate {} is not above -1", Q(r))
            }
            ViolationKind::CreditBelowDeposit { deposit, credit } => {
                write!(f, "{n}: credit rate {} is below deposit rate {}", Q(credit), Q(deposit))
            }
            ViolationKind::NonZeroInitialRate { deposit, credit } => write!(
                f,
                "{n}: time-0 rates must be zero (deposit {}, credit {})",
                Q(deposit),
                Q(credit)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    tree: EventTree,
    bid: AdaptedProcess,
    ask: AdaptedProcess,
    deposit_rate: PredictableProcess,
    credit_rate: PredictableProcess,
}

impl MarketModel {
    /// Assembles a model and rejects it unless [`MarketModel::validate`] is clean.
    pub fn new(
        tree: EventTree,
        bid: AdaptedProcess,
        ask: AdaptedProcess,
        deposit_rate: PredictableProcess,
        credit_rate: PredictableProcess,
    ) -> Result<Self, ModelError> {
        let model = Self::from_parts(tree, bid, ask, deposit_rate, credit_rate)?;
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    /// Assembles a model checking only that every process fits the tree.
    pub fn from_parts(
        tree: EventTree,
        bid: AdaptedProcess,
        ask: AdaptedProcess,
        deposit_rate: PredictableProcess,
        credit_rate: PredictableProcess,
    ) -> Result<Self, ModelError> {
        for len in [bid.len(), ask.len(), deposit_rate.len(), credit_rate.len()] {
            if len != tree.len() {
                return Err(TreeError::LengthMismatch {
                    expected: tree.len(),
                    got: len,
                }
                .into());
            }
        }
        for n in tree.node_ids() {
            if deposit_rate.next(n).is_some() == tree.is_terminal(n)
                || credit_rate.next(n).is_some() == tree.is_terminal(n)
            {
                return Err(TreeError::PredictableShape(n).into());
            }
        }
        Ok(Self {
            tree,
            bid,
            ask,
            deposit_rate,
            credit_rate,
        })
    }

    /// Frictionless-style constructor: constant bid/ask spread-free prices and
    /// a single rate applied to both deposits and loans.
    pub fn frictionless(tree: EventTree, price: AdaptedProcess, rate: Rational) -> Result<Self, ModelError> {
        let rates = PredictableProcess::constant(&tree, Rational::zero(), rate);
        Self::new(tree, price.clone(), price, rates.clone(), rates)
    }

    /// Every violation of the price ordering, the rate ordering and the
    /// zero time-0 rate convention, in node order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let root = self.tree.root();
        let (d0, c0) = (self.deposit_rate.initial(), self.credit_rate.initial());
        if !d0.is_zero() || !c0.is_zero() {
            out.push(Violation {
                node: root,
                kind: ViolationKind::NonZeroInitialRate {
                    deposit: d0.clone(),
                    credit: c0.clone(),
                },
            });
        }
        let minus_one = -Rational::one();
        for n in self.tree.node_ids() {
            let (bid, ask) = (&self.bid[n], &self.ask[n]);
            if !bid.is_positive() {
                out.push(Violation {
                    node: n,
                    kind: ViolationKind::NonPositiveBid(bid.clone()),
                });
            }
            if ask < bid {
                out.push(Violation {
                    node: n,
                    kind: ViolationKind::AskBelowBid {
                        bid: bid.clone(),
                        ask: ask.clone(),
                    },
                });
            }
            if let (Some(d), Some(c)) = (self.deposit_rate.next(n), self.credit_rate.next(n)) {
                if *d <= minus_one {
                    out.push(Violation {
                        node: n,
                        kind: ViolationKind::DepositRateTooLow(d.clone()),
                    });
                }
                if c < d {
                    out.push(Violation {
                        node: n,
                        kind: ViolationKind::CreditBelowDeposit {
                            deposit: d.clone(),
                            credit: c.clone(),
                        },
                    });
                }
            }
        }
        out
    }

    pub(crate) fn ensure_valid(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    pub fn tree(&self) -> &EventTree {
        &self.tree
    }

    pub fn bid(&self, node: NodeId) -> &Rational {
        &self.bid[node]
    }

    pub fn ask(&self, node: NodeId) -> &Rational {
        &self.ask[node]
    }

    pub fn bids(&self) -> &AdaptedProcess {
        &self.bid
    }

    pub fn asks(&self) -> &AdaptedProcess {
        &self.ask
    }

    pub fn deposit_rates(&self) -> &PredictableProcess {
        &self.deposit_rate
    }

    pub fn credit_rates(&self) -> &PredictableProcess {
        &self.credit_rate
    }

    /// `(R^d, R^c)` for the period following a non-terminal node.
    pub fn next_factors(&self, node: NodeId) -> Option<(Rational, Rational)> {
        let d = self.deposit_rate.next(node)?;
        let c = self.credit_rate.next(node)?;
        Some((Rational::one() + d, Rational::one() + c))
    }

    /// `(R^d_t, R^c_t)` for the period ending at `node`; `(1, 1)` at the root.
    pub fn factors_into(&self, node: NodeId) -> (Rational, Rational) {
        let one = Rational::one();
        (
            &one + self.deposit_rate.at(&self.tree, node),
            &one + self.credit_rate.at(&self.tree, node),
        )
    }

    /// The four `(R, x)` corners of the rate and price bands at `node`, in
    /// the order (credit, ask), (credit, bid), (deposit, ask), (deposit, bid).
    pub fn corners(&self, node: NodeId) -> [(Rational, Rational); 4] {
        let (rd, rc) = self.factors_into(node);
        let (b, a) = (self.bid(node).clone(), self.ask(node).clone());
        [(rc.clone(), a.clone()), (rc, b.clone()), (rd.clone(), a), (rd, b)]
    }

    /// Cash `cash` held over the period ending at `node`, accrued.
    pub fn accrue_into(&self, node: NodeId, cash: &Rational) -> Rational {
        let (rd, rc) = self.factors_into(node);
        accrue_raw(&rd, &rc, cash)
    }

    /// Liquidation value of `(cash, shares)` at `node`.
    pub fn liquidation_value_at(&self, node: NodeId, cash: &Rational, shares: &Rational) -> Rational {
        liquidation_raw(self.bid(node), self.ask(node), cash, shares)
    }

    pub fn is_frictionless(&self) -> bool {
        self.tree.node_ids().all(|n| self.bid[n] == self.ask[n])
            && self
                .tree
                .non_terminals()
                .all(|n| self.deposit_rate.next(n) == self.credit_rate.next(n))
    }

    /// Structural content hash (hex SHA-256 over the canonical encoding).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for n in self.tree.node_ids() {
            let parent = self.tree.parent(n).map_or(-1i64, |p| p.0 as i64);
            let rate = |p: &PredictableProcess| p.next(n).map(|r| Q(r).to_string()).unwrap_or_default();
            let line = format!(
                "{}|{}|{}|{}|{}|{}|{}\n",
                n.0,
                parent,
                Q(self.tree.cond_prob(n)),
                Q(&self.bid[n]),
                Q(&self.ask[n]),
                rate(&self.deposit_rate),
                rate(&self.credit_rate),
            );
            h.update(line.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// One-period growth of a cash balance: deposits grow at `deposit_r`, loans at `credit_r`.
pub fn accrue(deposit_r: &Rational, credit_r: &Rational, cash: &Rational) -> Result<Rational, ModelError> {
    if !(credit_r >= deposit_r && deposit_r.is_positive()) {
        return Err(ModelError::RateOrdering {
            deposit: Q(deposit_r).to_string(),
            credit: Q(credit_r).to_string(),
        });
    }
    Ok(accrue_raw(deposit_r, credit_r, cash))
}

pub(crate) fn accrue_raw(deposit_r: &Rational, credit_r: &Rational, cash: &Rational) -> Rational {
    positive_part(cash) * deposit_r - negative_part(cash) * credit_r
}

/// Cash obtained by unwinding `(cash, shares)`: long stock sold at the bid,
/// short stock bought back at the ask.
pub fn liquidation_value(
    bid: &Rational,
    ask: &Rational,
    cash: &Rational,
    shares: &Rational,
) -> Result<Rational, ModelError> {
    check_prices(bid, ask)?;
    Ok(liquidation_raw(bid, ask, cash, shares))
}

pub(crate) fn liquidation_raw(bid: &Rational, ask: &Rational, cash: &Rational, shares: &Rational) -> Rational {
    cash + positive_part(shares) * bid - negative_part(shares) * ask
}

/// Cost of establishing `(cash, shares)` from nothing.
pub fn setup_cost(bid: &Rational, ask: &Rational, cash: &Rational, shares: &Rational) -> Result<Rational, ModelError> {
    check_prices(bid, ask)?;
    Ok(cash + positive_part(shares) * ask - negative_part(shares) * bid)
}

fn check_prices(bid: &Rational, ask: &Rational) -> Result<(), ModelError> {
    if ask >= bid && bid.is_positive() {
        Ok(())
    } else {
        Err(ModelError::PriceOrdering {
            bid: Q(bid).to_string(),
            ask: Q(ask).to_string(),
        })
    }
}

/// Accumulation factor `B_t = R_0 · R_1 ⋯ R_t` along each path, together
/// with the predictable growth process that generated it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeflatorPath {
    pub growth: PredictableProcess,
    pub values: AdaptedProcess,
}

impl DeflatorPath {
    pub fn at(&self, node: NodeId) -> &Rational {
        &self.values[node]
    }
}

pub fn deflator_from_rate(tree: &EventTree, growth: &PredictableProcess) -> Result<DeflatorPath, ModelError> {
    if growth.len() != tree.len() {
        return Err(TreeError::LengthMismatch {
            expected: tree.len(),
            got: growth.len(),
        }
        .into());
    }
    if !growth.initial().is_positive() {
        return Err(ModelError::NonPositiveInitialFactor(Q(growth.initial()).to_string()));
    }
    let mut values = AdaptedProcess::constant(tree, growth.initial().clone());
    for n in tree.node_ids().skip(1) {
        let p = tree.parent(n).expect("non-root has a parent");
        let r = growth.next(p).ok_or(TreeError::PredictableShape(p))?;
        if !r.is_positive() {
            return Err(ModelError::NonPositiveFactor {
                node: p,
                value: Q(r).to_string(),
            });
        }
        let b = &values[p] * r;
        values.set(n, b);
    }
    Ok(DeflatorPath {
        growth: growth.clone(),
        values,
    })
}

impl MarketModel {
    /// Deflators `(B^d, B^c)` accumulated at the deposit and credit rates.
    pub fn deflators(&self) -> (DeflatorPath, DeflatorPath) {
        let one = Rational::one();
        let d = self.deposit_rate.map(|r| &one + r);
        let c = self.credit_rate.map(|r| &one + r);
        (
            deflator_from_rate(&self.tree, &d).expect("validated deposit factors are positive"),
            deflator_from_rate(&self.tree, &c).expect("validated credit factors are positive"),
        )
    }
}
