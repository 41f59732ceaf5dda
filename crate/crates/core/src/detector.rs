//! Arbitrage detection through a linear program over the self-financing cone.
//!
//! The program maximizes the expected liquidation payoff of a self-financing
//! strategy with non-positive initial outlay. Its feasible set is a cone, so
//! the optimum is either 0 or unbounded. An unbounded ray is an arbitrage
//! strategy. At an optimum of 0 the row multipliers of the terminal payoff
//! constraints, divided by the multiplier of the initial-outlay row, form a
//! consistent discount factor: a strictly positive terminal pair
//! `(Z^R_T, Z^S_T)` with `E_q[Z^R_T α_{T+1} + Z^S_T β_{T+1}] ≤ α_0` for every
//! self-financing strategy.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::lp::{self, Bounds, LinearProgram, LpOutcome, Relation};
use crate::market::{MarketModel, ModelError};
use crate::rational::Rational;
use crate::strategy::{self, ArbitrageCheck, Portfolio, TradingStrategy};
use crate::tree::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("internal invariant failure: {0}")]
    Internal(String),
}

/// Terminal values of a consistent discount factor, in terminal-node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscountFactor {
    pub entries: Vec<DiscountEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscountEntry {
    pub node: NodeId,
    pub cash: Rational,
    pub stock: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArbitrageReport {
    Arbitrage {
        strategy: TradingStrategy,
        witness: NodeId,
        payoff: Rational,
    },
    NoArbitrage {
        discount_factor: DiscountFactor,
    },
}

impl ArbitrageReport {
    pub fn is_arbitrage(&self) -> bool {
        matches!(self, ArbitrageReport::Arbitrage { .. })
    }
}

/// Variable and row positions of the detection program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimalLayout {
    /// Column of `(α, β)` chosen at each non-terminal node.
    pub trade_cols: Vec<Option<(usize, usize)>>,
    /// Column of the payoff variable `w` of each terminal node.
    pub payoff_cols: Vec<Option<usize>>,
    /// First of the four corner rows of each node, followed at terminal
    /// nodes by the row `−w ≤ 0`.
    pub node_rows: Vec<usize>,
}

impl PrimalLayout {
    pub const INITIAL_CASH_COL: usize = 0;
    pub const INITIAL_CASH_ROW: usize = 0;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimalLp {
    pub lp: LinearProgram,
    pub layout: PrimalLayout,
}

/// Builds the detection program. Variables are the initial cash `α_0`, the
/// portfolio `(α, β)` chosen at every non-terminal node and a payoff `w` per
/// terminal node, all free. Rows are `α_0 ≤ 0`, the four corner inequalities
/// of every rebalancing into a non-terminal node, and at every terminal node
/// `w ≤ α R + β x` over the four corners together with `w ≥ 0`.
pub fn build_primal_lp(model: &MarketModel) -> Result<PrimalLp, ModelError> {
    model.ensure_valid()?;
    let tree = model.tree();
    let n = tree.len();
    let mut trade_cols = vec![None; n];
    let mut payoff_cols = vec![None; n];
    let mut next = 1;
    for node in tree.non_terminals() {
        trade_cols[node.0] = Some((next, next + 1));
        next += 2;
    }
    for node in tree.terminals() {
        payoff_cols[node.0] = Some(next);
        next += 1;
    }

    let mut objective = vec![Rational::zero(); next];
    for node in tree.terminals() {
        objective[payoff_cols[node.0].expect("terminal column")] = tree.node_prob(node);
    }
    let mut lp = LinearProgram::new(objective);
    lp.add_sparse(
        &[(PrimalLayout::INITIAL_CASH_COL, Rational::from_integer(1.into()))],
        Relation::Le,
        Rational::zero(),
    );

    let one = Rational::from_integer(1.into());
    let mut node_rows = vec![0; n];
    for node in tree.node_ids() {
        // −(held value at the corner) + (target value at the corner) ≤ 0
        let held = |r: &Rational, x: &Rational| -> Vec<(usize, Rational)> {
            match tree.parent(node) {
                None => vec![(PrimalLayout::INITIAL_CASH_COL, -r)],
                Some(p) => {
                    let (a, b) = trade_cols[p.0].expect("parent is non-terminal");
                    vec![(a, -r), (b, -x)]
                }
            }
        };
        node_rows[node.0] = lp.num_constraints();
        for (r, x) in model.corners(node) {
            let mut terms = held(&r, &x);
            match (trade_cols[node.0], payoff_cols[node.0]) {
                (Some((a, b)), _) => {
                    terms.push((a, one.clone()));
                    terms.push((b, x.clone()));
                }
                (None, Some(w)) => terms.push((w, one.clone())),
                (None, None) => unreachable!("every node is terminal or not"),
            }
            lp.add_sparse(&terms, Relation::Le, Rational::zero());
        }
        if let Some(w) = payoff_cols[node.0] {
            lp.add_sparse(&[(w, -&one)], Relation::Le, Rational::zero());
        }
    }
    Ok(PrimalLp {
        lp,
        layout: PrimalLayout {
            trade_cols,
            payoff_cols,
            node_rows,
        },
    })
}

/// Decides whether `model` admits arbitrage and returns the matching
/// certificate.
pub fn detect(model: &MarketModel) -> Result<ArbitrageReport, DetectError> {
    let PrimalLp { lp, layout } = build_primal_lp(model)?;
    let outcome = solve_cone(&lp)?;
    if let Some(e) = lp::certificate_error(&lp, &outcome) {
        return Err(DetectError::Internal(format!("detection certificate rejected: {e}")));
    }
    match outcome {
        LpOutcome::Unbounded { ray, .. } => strategy_from_ray(model, &layout, &ray),
        LpOutcome::Optimal { duals, objective, .. } => {
            if !objective.is_zero() {
                return Err(DetectError::Internal(format!(
                    "cone program has non-zero optimum {objective}"
                )));
            }
            discount_from_duals(model, &layout, &duals)
        }
        LpOutcome::Infeasible { .. } => Err(DetectError::Internal(
            "cone program reported infeasible although the zero strategy is feasible".into(),
        )),
    }
}

/// Solves `max c·x` subject to `A x ≤ 0` with `x` free, through the
/// feasibility problem `Aᵀ y = c`, `y ≥ 0`. Every primal pivot on the cone is
/// degenerate, while the feasibility problem has a non-zero right-hand side.
/// A feasible `y` is an optimal dual at value 0; a Farkas certificate `λ` of
/// its infeasibility gives the improving ray `x = −λ`.
pub fn solve_cone(cone: &LinearProgram) -> Result<LpOutcome, DetectError> {
    let n = cone.num_vars();
    let m = cone.num_constraints();
    let homogeneous = cone
        .constraints
        .iter()
        .all(|c| c.relation == Relation::Le && c.rhs.is_zero())
        && cone.bounds.iter().all(|b| b.lower.is_none() && b.upper.is_none());
    if !homogeneous {
        return Err(DetectError::Internal("program is not a free-variable cone".into()));
    }
    let mut feasibility = LinearProgram::new(vec![Rational::zero(); m]);
    for i in 0..m {
        feasibility.set_bounds(i, Bounds::non_negative());
    }
    for j in 0..n {
        let column = cone.constraints.iter().map(|c| c.coeffs[j].clone()).collect();
        feasibility.add_constraint(column, Relation::Eq, cone.objective[j].clone());
    }
    let origin = vec![Rational::zero(); n];
    match lp::solve(&feasibility).map_err(|e| DetectError::Internal(e.to_string()))? {
        LpOutcome::Optimal { primal, .. } => Ok(LpOutcome::Optimal {
            primal: origin,
            duals: primal,
            objective: Rational::zero(),
        }),
        LpOutcome::Infeasible { farkas } => Ok(LpOutcome::Unbounded {
            point: origin,
            ray: farkas.iter().map(|v| -v).collect(),
        }),
        LpOutcome::Unbounded { .. } => Err(DetectError::Internal(
            "feasibility problem with zero objective reported unbounded".into(),
        )),
    }
}

fn strategy_from_ray(
    model: &MarketModel,
    layout: &PrimalLayout,
    ray: &[Rational],
) -> Result<ArbitrageReport, DetectError> {
    let tree = model.tree();
    let holdings = tree
        .node_ids()
        .map(|node| match layout.trade_cols[node.0] {
            Some((a, b)) => Portfolio::new(ray[a].clone(), ray[b].clone()),
            None => Portfolio::default(),
        })
        .collect();
    let raw = TradingStrategy {
        initial_cash: ray[PrimalLayout::INITIAL_CASH_COL].clone(),
        holdings,
    }
    .with_liquidation(model)
    .map_err(|e| DetectError::Internal(e.to_string()))?;
    let largest = tree
        .terminals()
        .map(|w| raw.chosen(w).cash.clone())
        .max()
        .filter(|v| v.is_positive())
        .ok_or_else(|| DetectError::Internal("improving ray has no positive payoff".into()))?;
    let scaled = raw.scale(&largest.recip());
    match strategy::is_arbitrage(model, &scaled).map_err(|e| DetectError::Internal(e.to_string()))? {
        ArbitrageCheck::Arbitrage { witness, payoff } => Ok(ArbitrageReport::Arbitrage {
            strategy: scaled,
            witness,
            payoff,
        }),
        other => Err(DetectError::Internal(format!(
            "strategy extracted from the ray is not an arbitrage: {other:?}"
        ))),
    }
}

fn discount_from_duals(
    model: &MarketModel,
    layout: &PrimalLayout,
    duals: &[Rational],
) -> Result<ArbitrageReport, DetectError> {
    let tree = model.tree();
    let w0 = &duals[PrimalLayout::INITIAL_CASH_ROW];
    if !w0.is_positive() {
        return Err(DetectError::Internal(format!(
            "initial-outlay multiplier {w0} is not positive"
        )));
    }
    let mut entries = Vec::with_capacity(tree.terminal_count());
    for node in tree.terminals() {
        let first = layout.node_rows[node.0];
        let weight = tree.node_prob(node) * w0;
        let mut cash = Rational::zero();
        let mut stock = Rational::zero();
        for (k, (_, x)) in model.corners(node).iter().enumerate() {
            let y = &duals[first + k];
            cash += y;
            stock += y * x;
        }
        cash /= &weight;
        stock /= &weight;
        if !cash.is_positive() || !stock.is_positive() {
            return Err(DetectError::Internal(format!(
                "discount factor is not positive at {node}"
            )));
        }
        entries.push(DiscountEntry { node, cash, stock });
    }
    Ok(ArbitrageReport::NoArbitrage {
        discount_factor: DiscountFactor { entries },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::strategy::tests::one_period;

    #[test]
    fn one_period_program_shape() {
        let m = one_period(90, 100, 110, 95, int(0), int(0));
        let PrimalLp { lp, layout } = build_primal_lp(&m).unwrap();
        assert_eq!(lp.num_vars(), 5);
        assert_eq!(lp.num_constraints(), 15);
        assert_eq!(layout.node_rows, vec![1, 5, 10]);
    }

    #[test]
    fn frictionless_binomial_has_zero_optimum() {
        let m = one_period(100, 100, 120, 80, int(0), int(0));
        let PrimalLp { lp, .. } = build_primal_lp(&m).unwrap();
        match lp::solve(&lp).unwrap() {
            LpOutcome::Optimal { objective, .. } => assert!(objective.is_zero()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dominated_stock_is_arbitrage() {
        let m = one_period(100, 100, 110, 105, int(0), int(0));
        let report = detect(&m).unwrap();
        let ArbitrageReport::Arbitrage { strategy, .. } = report else {
            panic!("expected arbitrage")
        };
        let payoffs: Vec<_> = strategy::terminal_values(&m, &strategy)
            .unwrap()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(payoffs.iter().max(), Some(&int(1)));
        assert!(payoffs.iter().all(|v| !v.is_negative()));
    }

    #[test]
    fn spread_at_root_removes_arbitrage() {
        let m = one_period(90, 100, 110, 95, int(0), int(0));
        assert!(!detect(&m).unwrap().is_arbitrage());
    }

    #[test]
    fn credit_rate_band_removes_arbitrage() {
        use crate::rational::ratio;
        let m = one_period(100, 100, 120, 100, int(0), ratio(1, 10));
        let ArbitrageReport::NoArbitrage { discount_factor } = detect(&m).unwrap() else {
            panic!("expected no arbitrage")
        };
        assert_eq!(discount_factor.entries.len(), 2);
    }
}
