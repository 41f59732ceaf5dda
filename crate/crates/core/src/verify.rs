//! Definitional re-verification of certificates.
//!
//! Nothing here calls the LP solver: every check recomputes the defining
//! (in)equality from the model data with exact arithmetic and records both
//! sides of each one that fails.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{ArbitrageReport, DiscountFactor};
use crate::market::{accrue_raw, liquidation_raw, MarketModel};
use crate::pricing::{self, Construction, MartingaleTriple, PricingSystem};
use crate::rational::{serde_str, Rational};
use crate::strategy::TradingStrategy;
use crate::tree::{AdaptedProcess, NodeId, PredictableProcess};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    MartingaleTriple,
    PricingSystem,
    Supermartingale,
    Strategy,
    Arbitrage,
    DiscountFactor,
    Dichotomy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Global,
    Node(NodeId),
}

/// The condition that failed. Each one reads `lhs REL rhs` for the relation
/// named in its description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Length of a component (`lhs`) against the expected length (`rhs`).
    Shape,
    /// Price `≥` bid.
    PriceAtLeastBid,
    /// Price `≤` ask.
    PriceAtMostAsk,
    /// Growth factor `≥` deposit factor.
    RateAtLeastDeposit,
    /// Growth factor `≤` credit factor.
    RateAtMostCredit,
    /// Time-0 growth factor `=` 1.
    InitialRate,
    /// Terminal probability `>` 0.
    ProbabilityPositive,
    /// Total probability `=` 1.
    ProbabilitySum,
    /// Deflated price `=` conditional expectation of the next deflated price.
    Martingale,
    /// `Z^R > 0`.
    CashDensityPositive,
    /// `Z^S > 0`.
    StockDensityPositive,
    /// `Z^S ≥ S^b Z^R`.
    DensityAtLeastBid,
    /// `Z^S ≤ S^a Z^R`.
    DensityAtMostAsk,
    /// `Z^S(ν) = E_q[Z^S | ν]`.
    StockMartingale,
    /// `Z^R(ν) = R E_q[Z^R | ν]`.
    CashRecursion,
    /// `Z^R(root) = 1`.
    RootNormalization,
    /// Deflated value `≥` conditional expectation of the next deflated value.
    Supermartingale,
    /// Liquidation value of a rebalancing `≥` 0.
    SelfFinancing,
    /// Initial outlay `≤` 0.
    InitialCost,
    /// Terminal liquidation value `≥` 0.
    TerminalNonNegative,
    /// Largest terminal liquidation value `>` 0.
    StrictProfit,
    /// Discount factor component `>` 0.
    DiscountPositive,
    /// Expected discounted final portfolio `≤` initial outlay.
    DiscountBound,
    /// Number of verdicts claimed `=` 1.
    ExclusiveVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub location: Location,
    pub condition: Condition,
    #[serde(with = "serde_str")]
    pub lhs: Rational,
    #[serde(with = "serde_str")]
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub subject: Subject,
    pub passed: bool,
    pub violations: Vec<Finding>,
}

impl VerificationReport {
    pub fn new(subject: Subject, violations: Vec<Finding>) -> Self {
        Self {
            subject,
            passed: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, location: Location, condition: Condition) -> bool {
        self.violations
            .iter()
            .any(|f| f.location == location && f.condition == condition)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("strategy is not self-financing ({} violation(s))", .0.violations.len())]
    NotSelfFinancing(VerificationReport),
}

#[derive(Default)]
struct Findings(Vec<Finding>);

impl Findings {
    fn push(&mut self, location: Location, condition: Condition, lhs: Rational, rhs: Rational) {
        self.0.push(Finding {
            location,
            condition,
            lhs,
            rhs,
        });
    }

    fn at(&mut self, node: NodeId, condition: Condition, lhs: Rational, rhs: Rational) {
        self.push(Location::Node(node), condition, lhs, rhs);
    }

    fn shape(&mut self, got: usize, expected: usize) -> bool {
        if got != expected {
            self.push(
                Location::Global,
                Condition::Shape,
                Rational::from_integer(got.into()),
                Rational::from_integer(expected.into()),
            );
        }
        got == expected
    }

    fn into_report(self, subject: Subject) -> VerificationReport {
        VerificationReport::new(subject, self.0)
    }
}

fn predictable_shape_ok(model: &MarketModel, rate: &PredictableProcess) -> bool {
    let tree = model.tree();
    rate.len() == tree.len() && tree.node_ids().all(|n| rate.next(n).is_some() != tree.is_terminal(n))
}

/// Checks `R_0 = 1` and `R^d ≤ R ≤ R^c` on every period.
fn check_rate_band(model: &MarketModel, rate: &PredictableProcess, f: &mut Findings) {
    let one = Rational::one();
    if *rate.initial() != one {
        f.at(model.tree().root(), Condition::InitialRate, rate.initial().clone(), one);
    }
    for node in model.tree().non_terminals() {
        let r = rate.next(node).expect("shape checked");
        let (rd, rc) = model.next_factors(node).expect("non-terminal node has rates");
        if *r < rd {
            f.at(node, Condition::RateAtLeastDeposit, r.clone(), rd);
        } else if *r > rc {
            f.at(node, Condition::RateAtMostCredit, r.clone(), rc);
        }
    }
}

/// Products of the growth factors along each path; `None` if a factor is
/// not positive.
fn deflator(model: &MarketModel, rate: &PredictableProcess) -> Option<AdaptedProcess> {
    let tree = model.tree();
    if !rate.initial().is_positive() {
        return None;
    }
    let mut b = AdaptedProcess::constant(tree, rate.initial().clone());
    for node in tree.node_ids().skip(1) {
        let p = tree.parent(node).expect("non-root node has a parent");
        let r = rate.next(p)?;
        if !r.is_positive() {
            return None;
        }
        let v = &b[p] * r;
        b.set(node, v);
    }
    Some(b)
}

/// Probability of every node under a measure given on the terminal nodes.
fn node_masses(model: &MarketModel, measure: &[(NodeId, Rational)]) -> AdaptedProcess {
    let tree = model.tree();
    let mut mass = AdaptedProcess::constant(tree, Rational::zero());
    for (w, p) in measure {
        mass.set(*w, p.clone());
    }
    for node in tree.node_ids().rev() {
        if let Some(parent) = tree.parent(node) {
            let v = &mass[parent] + &mass[node];
            mass.set(parent, v);
        }
    }
    mass
}

/// Checks the wedges, the rate band, positivity and normalization of `P`, and
/// that `S / B` is a `P`-martingale.
pub fn verify_triple(model: &MarketModel, tr: &MartingaleTriple) -> VerificationReport {
    let tree = model.tree();
    let mut f = Findings::default();
    let terminals: Vec<NodeId> = tree.terminals().collect();
    let measure_nodes: Vec<NodeId> = tr.measure.iter().map(|(n, _)| *n).collect();
    let shapes = [
        f.shape(tr.price.len(), tree.len()),
        f.shape(tr.rate.len(), tree.len()),
        f.shape(tr.measure.len(), terminals.len()),
    ];
    if shapes.contains(&false) || measure_nodes != terminals || !predictable_shape_ok(model, &tr.rate) {
        if f.0.is_empty() {
            f.shape(0, terminals.len());
        }
        return f.into_report(Subject::MartingaleTriple);
    }

    for node in tree.node_ids() {
        let s = &tr.price[node];
        if s < model.bid(node) {
            f.at(node, Condition::PriceAtLeastBid, s.clone(), model.bid(node).clone());
        }
        if s > model.ask(node) {
            f.at(node, Condition::PriceAtMostAsk, s.clone(), model.ask(node).clone());
        }
    }
    check_rate_band(model, &tr.rate, &mut f);
    for (w, p) in &tr.measure {
        if !p.is_positive() {
            f.at(*w, Condition::ProbabilityPositive, p.clone(), Rational::zero());
        }
    }
    let total: Rational = tr.measure.iter().map(|(_, p)| p).sum();
    if !total.is_one() {
        f.push(Location::Global, Condition::ProbabilitySum, total, Rational::one());
    }

    if let Some(b) = deflator(model, &tr.rate) {
        let mass = node_masses(model, &tr.measure);
        for node in tree.non_terminals() {
            if mass[node].is_zero() {
                continue;
            }
            let here = &tr.price[node] / &b[node];
            let expected: Rational = tree
                .children(node)
                .iter()
                .map(|&c| &mass[c] * &tr.price[c] / &b[c])
                .sum::<Rational>()
                / &mass[node];
            if here != expected {
                f.at(node, Condition::Martingale, here, expected);
            }
        }
    }
    f.into_report(Subject::MartingaleTriple)
}

/// Checks positivity, the wedge `S^b Z^R ≤ Z^S ≤ S^a Z^R`, that `Z^S` is a
/// `q`-martingale, the rate band, `Z^R_t = R_{t+1} E_q[Z^R_{t+1}]` and
/// `Z^R(root) = 1`.
pub fn verify_pricing_system(model: &MarketModel, ps: &PricingSystem) -> VerificationReport {
    let tree = model.tree();
    let mut f = Findings::default();
    let shapes = [
        f.shape(ps.z_r.len(), tree.len()),
        f.shape(ps.z_s.len(), tree.len()),
        f.shape(ps.rate.len(), tree.len()),
    ];
    if shapes.contains(&false) || !predictable_shape_ok(model, &ps.rate) {
        if f.0.is_empty() {
            f.shape(0, tree.len());
        }
        return f.into_report(Subject::PricingSystem);
    }

    let zero = Rational::zero();
    for node in tree.node_ids() {
        let (zr, zs) = (&ps.z_r[node], &ps.z_s[node]);
        if !zr.is_positive() {
            f.at(node, Condition::CashDensityPositive, zr.clone(), zero.clone());
        }
        if !zs.is_positive() {
            f.at(node, Condition::StockDensityPositive, zs.clone(), zero.clone());
        }
        let low = model.bid(node) * zr;
        if *zs < low {
            f.at(node, Condition::DensityAtLeastBid, zs.clone(), low);
        }
        let high = model.ask(node) * zr;
        if *zs > high {
            f.at(node, Condition::DensityAtMostAsk, zs.clone(), high);
        }
    }
    for node in tree.non_terminals() {
        let mean =
            |x: &AdaptedProcess| -> Rational { tree.children(node).iter().map(|&c| tree.cond_prob(c) * &x[c]).sum() };
        let zs_next = mean(&ps.z_s);
        if ps.z_s[node] != zs_next {
            f.at(node, Condition::StockMartingale, ps.z_s[node].clone(), zs_next);
        }
        let r = ps.rate.next(node).expect("shape checked");
        let zr_next = r * mean(&ps.z_r);
        if ps.z_r[node] != zr_next {
            f.at(node, Condition::CashRecursion, ps.z_r[node].clone(), zr_next);
        }
    }
    check_rate_band(model, &ps.rate, &mut f);
    let root = tree.root();
    if !ps.z_r[root].is_one() {
        f.at(
            root,
            Condition::RootNormalization,
            ps.z_r[root].clone(),
            Rational::one(),
        );
    }
    f.into_report(Subject::PricingSystem)
}

/// `ϑ(ϱ(α_t) − α_{t+1}, β_t − β_{t+1})` at every node, from the accrual and
/// liquidation definitions.
fn check_self_financing(model: &MarketModel, s: &TradingStrategy, f: &mut Findings) -> bool {
    let tree = model.tree();
    if !f.shape(s.holdings.len(), tree.len()) {
        return false;
    }
    let before = f.0.len();
    for node in tree.node_ids() {
        let held = s.held_into(model, node);
        let next = s.chosen(node);
        let (rd, rc) = model.factors_into(node);
        let cash = accrue_raw(&rd, &rc, &held.cash) - &next.cash;
        let value = liquidation_raw(model.bid(node), model.ask(node), &cash, &(&held.shares - &next.shares));
        if value.is_negative() {
            f.at(node, Condition::SelfFinancing, value, Rational::zero());
        }
    }
    f.0.len() == before
}

pub fn verify_strategy(model: &MarketModel, s: &TradingStrategy) -> VerificationReport {
    let mut f = Findings::default();
    check_self_financing(model, s, &mut f);
    f.into_report(Subject::Strategy)
}

/// Checks the arbitrage definition: self-financing, `α_0 ≤ 0`, every final
/// portfolio liquidates to a non-negative value and at least one to a
/// positive value.
pub fn verify_arbitrage(model: &MarketModel, s: &TradingStrategy) -> VerificationReport {
    let mut f = Findings::default();
    check_self_financing(model, s, &mut f);
    if s.holdings.len() != model.tree().len() {
        return f.into_report(Subject::Arbitrage);
    }
    let zero = Rational::zero();
    if s.initial_cash.is_positive() {
        f.push(
            Location::Global,
            Condition::InitialCost,
            s.initial_cash.clone(),
            zero.clone(),
        );
    }
    let mut best: Option<Rational> = None;
    for w in model.tree().terminals() {
        let p = s.chosen(w);
        let v = liquidation_raw(model.bid(w), model.ask(w), &p.cash, &p.shares);
        if v.is_negative() {
            f.at(w, Condition::TerminalNonNegative, v.clone(), zero.clone());
        }
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    let best = best.unwrap_or_default();
    if !best.is_positive() {
        f.push(Location::Global, Condition::StrictProfit, best, zero);
    }
    f.into_report(Subject::Arbitrage)
}

/// Checks that `(α_t R_t + β_t S_t) / B_t` is a `P`-supermartingale for a
/// self-financing strategy; `R`, `S` and `B` come from the triple.
pub fn verify_supermartingale(
    model: &MarketModel,
    tr: &MartingaleTriple,
    s: &TradingStrategy,
) -> Result<VerificationReport, VerifyError> {
    let mut sf = Findings::default();
    if !check_self_financing(model, s, &mut sf) {
        return Err(VerifyError::NotSelfFinancing(sf.into_report(Subject::Strategy)));
    }
    let tree = model.tree();
    let mut f = Findings::default();
    let triple = verify_triple(model, tr);
    if triple.violations.iter().any(|v| v.condition == Condition::Shape) {
        return Ok(VerificationReport::new(Subject::Supermartingale, triple.violations));
    }
    let Some(b) = deflator(model, &tr.rate) else {
        f.at(
            tree.root(),
            Condition::InitialRate,
            tr.rate.initial().clone(),
            Rational::one(),
        );
        return Ok(f.into_report(Subject::Supermartingale));
    };
    let mass = node_masses(model, &tr.measure);
    let value = |node: NodeId| -> Rational {
        let held = s.held_into(model, node);
        let r = tr.rate.at(tree, node);
        (&held.cash * r + &held.shares * &tr.price[node]) / &b[node]
    };
    for node in tree.non_terminals() {
        if !mass[node].is_positive() {
            continue;
        }
        let here = value(node);
        let next: Rational = tree
            .children(node)
            .iter()
            .map(|&c| &mass[c] * value(c))
            .sum::<Rational>()
            / &mass[node];
        if here < next {
            f.at(node, Condition::Supermartingale, here, next);
        }
    }
    Ok(f.into_report(Subject::Supermartingale))
}

/// Checks that the discount factor is strictly positive and that
/// `E_q[Z^R_T α_{T+1} + Z^S_T β_{T+1}] ≤ α_0` for each given strategy.
pub fn verify_discount_factor(
    model: &MarketModel,
    df: &DiscountFactor,
    strategies: &[TradingStrategy],
) -> Result<VerificationReport, VerifyError> {
    let tree = model.tree();
    let mut f = Findings::default();
    let terminals: Vec<NodeId> = tree.terminals().collect();
    let nodes: Vec<NodeId> = df.entries.iter().map(|e| e.node).collect();
    if !f.shape(nodes.len(), terminals.len()) || nodes != terminals {
        if f.0.is_empty() {
            f.shape(0, terminals.len());
        }
        return Ok(f.into_report(Subject::DiscountFactor));
    }
    for e in &df.entries {
        for v in [&e.cash, &e.stock] {
            if !v.is_positive() {
                f.at(e.node, Condition::DiscountPositive, v.clone(), Rational::zero());
            }
        }
    }
    for s in strategies {
        let mut sf = Findings::default();
        if !check_self_financing(model, s, &mut sf) {
            return Err(VerifyError::NotSelfFinancing(sf.into_report(Subject::Strategy)));
        }
        let expected: Rational = df
            .entries
            .iter()
            .map(|e| {
                let p = s.chosen(e.node);
                tree.node_prob(e.node) * (&e.cash * &p.cash + &e.stock * &p.shares)
            })
            .sum();
        if expected > s.initial_cash {
            f.push(
                Location::Global,
                Condition::DiscountBound,
                expected,
                s.initial_cash.clone(),
            );
        }
    }
    Ok(f.into_report(Subject::DiscountFactor))
}

/// Passes iff exactly one of the two verdicts is claimed and the claimed
/// certificate verifies: an arbitrage strategy, or a pricing system together
/// with the martingale triple it induces.
pub fn verify_arbitrage_dichotomy(
    model: &MarketModel,
    report: &ArbitrageReport,
    construction: &Construction,
) -> VerificationReport {
    let mut f = Findings::default();
    let arbitrage = match report {
        ArbitrageReport::Arbitrage { strategy, .. } => Some(strategy),
        ArbitrageReport::NoArbitrage { .. } => None,
    };
    let system = match construction {
        Construction::System(ps) => Some(ps),
        Construction::NoSystem => None,
    };
    let claimed = usize::from(arbitrage.is_some()) + usize::from(system.is_some());
    if claimed != 1 {
        f.push(
            Location::Global,
            Condition::ExclusiveVerdict,
            Rational::from_integer(claimed.into()),
            Rational::one(),
        );
    }
    if let Some(s) = arbitrage {
        f.0.extend(verify_arbitrage(model, s).violations);
    }
    if let Some(ps) = system {
        let sys = verify_pricing_system(model, ps);
        if sys.passed {
            match pricing::system_to_triple(model, ps) {
                Ok(tr) => f.0.extend(verify_triple(model, &tr).violations),
                Err(_) => unreachable!("pricing system verified above"),
            }
        } else {
            f.0.extend(sys.violations);
        }
    }
    f.into_report(Subject::Dichotomy)
}
