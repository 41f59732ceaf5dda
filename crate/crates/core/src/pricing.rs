//! Consistent pricing systems and equivalent martingale triples.
//!
//! A consistent pricing system is a strictly positive pair `(Z^R, Z^S)` of
//! adapted processes with `Z^S` a `q`-martingale, `Z^S / Z^R` inside the
//! bid-ask band, and a rate `R` inside the deposit-credit band making
//! `B · Z^R` a `q`-martingale. [`construct`] finds one with a single linear
//! program when it exists; [`system_to_triple`] and [`triple_to_system`]
//! convert between pricing systems and martingale triples `(P, S, R)`.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lp::{self, Bounds, LinearProgram, LpOutcome, Relation};
use crate::market::{deflator_from_rate, MarketModel, ModelError};
use crate::rational::Rational;
use crate::tree::{AdaptedProcess, NodeId, PredictableProcess};
use crate::verify::{self, VerificationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PricingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("input fails verification with {} violation(s)", .0.violations.len())]
    Contract(VerificationReport),
    #[error("internal invariant failure: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricingSystem {
    pub z_r: AdaptedProcess,
    pub z_s: AdaptedProcess,
    /// Growth factors `R = 1 + r`, with `R_0 = 1`.
    pub rate: PredictableProcess,
}

/// `(P, S, R)`: a measure on the terminal nodes, a price inside the bid-ask
/// band and growth factors inside the rate band, with `S / B` a
/// `P`-martingale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MartingaleTriple {
    /// Probability of each terminal node, in terminal-node order.
    pub measure: Vec<(NodeId, Rational)>,
    pub price: AdaptedProcess,
    /// Growth factors `R = 1 + r`, with `R_0 = 1`.
    pub rate: PredictableProcess,
}

impl MartingaleTriple {
    pub fn prob(&self, node: NodeId) -> Option<&Rational> {
        self.measure.iter().find(|(n, _)| *n == node).map(|(_, p)| p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Construction {
    System(PricingSystem),
    NoSystem,
}

/// Column positions of the pricing program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PricingLayout {
    nodes: usize,
}

impl PricingLayout {
    /// Row of the root cap `z^R(root) ≤ 1`.
    pub const ROOT_ROW: usize = 0;

    pub fn z_r(&self, node: NodeId) -> usize {
        2 * node.0
    }

    pub fn z_s(&self, node: NodeId) -> usize {
        2 * node.0 + 1
    }

    pub fn epsilon(&self) -> usize {
        2 * self.nodes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricingLp {
    pub lp: LinearProgram,
    pub layout: PricingLayout,
}

/// Builds the program `max ε` over non-negative `z^R, z^S` per node and
/// `ε ≥ 0`, subject to `z^R(root) ≤ 1`, the wedge `S^b z^R ≤ z^S ≤ S^a z^R`
/// at every node, and at every non-terminal node ν with
/// `m(ν) = Σ q(μ|ν) z^R(μ)` the martingale equality
/// `z^S(ν) = Σ q(μ|ν) z^S(μ)` and the rate band `R^d m(ν) ≤ z^R(ν) ≤ R^c m(ν)`;
/// every terminal node has `z^R ≥ ε`.
///
/// The root is capped rather than pinned so that `z ≡ 0, ε = 0` is always
/// feasible; every constraint but the cap is homogeneous, so an optimum with
/// `ε > 0` rescales to `z^R(root) = 1`.
pub fn build_pricing_lp(model: &MarketModel) -> Result<PricingLp, ModelError> {
    model.ensure_valid()?;
    let tree = model.tree();
    let layout = PricingLayout { nodes: tree.len() };
    let one = Rational::one();
    let mut objective = vec![Rational::zero(); layout.epsilon() + 1];
    objective[layout.epsilon()] = one.clone();
    let mut lp = LinearProgram::new(objective);
    for j in 0..lp.num_vars() {
        lp.set_bounds(j, Bounds::non_negative());
    }

    lp.add_sparse(&[(layout.z_r(tree.root()), one.clone())], Relation::Le, one.clone());
    for node in tree.node_ids() {
        let (zr, zs) = (layout.z_r(node), layout.z_s(node));
        lp.add_sparse(
            &[(zr, model.bid(node).clone()), (zs, -&one)],
            Relation::Le,
            Rational::zero(),
        );
        lp.add_sparse(
            &[(zs, one.clone()), (zr, -model.ask(node))],
            Relation::Le,
            Rational::zero(),
        );
    }
    for node in tree.non_terminals() {
        let children = tree.children(node);
        let mut martingale = vec![(layout.z_s(node), one.clone())];
        martingale.extend(children.iter().map(|&c| (layout.z_s(c), -tree.cond_prob(c))));
        lp.add_sparse(&martingale, Relation::Eq, Rational::zero());

        let (rd, rc) = model.next_factors(node).expect("non-terminal node has rates");
        let band = |factor: &Rational, sign: &Rational| -> Vec<(usize, Rational)> {
            let mut terms = vec![(layout.z_r(node), -sign)];
            terms.extend(
                children
                    .iter()
                    .map(|&c| (layout.z_r(c), sign * factor * tree.cond_prob(c))),
            );
            terms
        };
        // R^d m − z^R ≤ 0 and z^R − R^c m ≤ 0
        lp.add_sparse(&band(&rd, &one), Relation::Le, Rational::zero());
        lp.add_sparse(&band(&rc, &-&one), Relation::Le, Rational::zero());
    }
    for node in tree.terminals() {
        lp.add_sparse(
            &[(layout.z_r(node), one.clone()), (layout.epsilon(), -&one)],
            Relation::Ge,
            Rational::zero(),
        );
    }
    Ok(PricingLp { lp, layout })
}

/// Finds a consistent pricing system, or reports that none exists.
pub fn construct(model: &MarketModel) -> Result<Construction, PricingError> {
    let PricingLp { lp, layout } = build_pricing_lp(model)?;
    let lp = feasibility_form(lp, &layout);
    let outcome = lp::solve(&lp).map_err(|e| PricingError::Internal(e.to_string()))?;
    if let Some(e) = lp::certificate_error(&lp, &outcome) {
        return Err(PricingError::Internal(format!("pricing certificate rejected: {e}")));
    }
    let primal = match outcome {
        LpOutcome::Optimal { primal, .. } => primal,
        LpOutcome::Infeasible { .. } => return Ok(Construction::NoSystem),
        LpOutcome::Unbounded { .. } => {
            return Err(PricingError::Internal("feasibility program reported unbounded".into()))
        }
    };
    let tree = model.tree();
    let root = primal[layout.z_r(tree.root())].clone();
    if !root.is_positive() {
        return Err(PricingError::Internal("root density is not positive".into()));
    }
    let z_r = AdaptedProcess::from_fn(tree, |n| &primal[layout.z_r(n)] / &root);
    let z_s = AdaptedProcess::from_fn(tree, |n| &primal[layout.z_s(n)] / &root);
    if let Some(n) = tree
        .node_ids()
        .find(|&n| !z_r[n].is_positive() || !z_s[n].is_positive())
    {
        return Err(PricingError::Internal(format!("pricing system is not positive at {n}")));
    }
    let rate = PredictableProcess::from_fn(tree, Rational::one(), |n| &z_r[n] / one_step_mean(model, &z_r, n));
    Ok(Construction::System(PricingSystem { z_r, z_s, rate }))
}

/// The pricing program with `ε` pinned to 1, the root cap dropped and a zero
/// objective. Its constraints are homogeneous apart from `z^R(ω) ≥ 1`, so it
/// is feasible exactly when the max-`ε` program has a positive optimum, and a
/// feasible point divided by its root density is a normalized system. The
/// max-`ε` program has a single non-zero right-hand side and pivots almost
/// only degenerately.
fn feasibility_form(mut lp: LinearProgram, layout: &PricingLayout) -> LinearProgram {
    let one = Rational::one();
    lp.constraints.remove(PricingLayout::ROOT_ROW);
    lp.objective.iter_mut().for_each(|c| *c = Rational::zero());
    lp.set_bounds(
        layout.epsilon(),
        Bounds {
            lower: Some(one.clone()),
            upper: Some(one),
        },
    );
    lp
}

/// `Σ q(μ|ν) X(μ)` over the children μ of `node`.
fn one_step_mean(model: &MarketModel, x: &AdaptedProcess, node: NodeId) -> Rational {
    let tree = model.tree();
    tree.children(node).iter().map(|&c| tree.cond_prob(c) * &x[c]).sum()
}

/// `P(ω) = B_T(ω) Z^R_T(ω) q(ω)` and `S = Z^S / Z^R`; the rate is kept.
pub fn system_to_triple(model: &MarketModel, ps: &PricingSystem) -> Result<MartingaleTriple, PricingError> {
    let report = verify::verify_pricing_system(model, ps);
    if !report.passed {
        return Err(PricingError::Contract(report));
    }
    let tree = model.tree();
    let deflator = deflator_from_rate(tree, &ps.rate)?;
    let measure = tree
        .terminals()
        .map(|w| (w, deflator.at(w) * &ps.z_r[w] * tree.node_prob(w)))
        .collect();
    let price = AdaptedProcess::from_fn(tree, |n| &ps.z_s[n] / &ps.z_r[n]);
    Ok(MartingaleTriple {
        measure,
        price,
        rate: ps.rate.clone(),
    })
}

/// `Z^R_T = P / (q B_T)`, then `Z^R_t = R_{t+1} E_q[Z^R_{t+1} | ν]` backwards,
/// and `Z^S = S Z^R`.
pub fn triple_to_system(model: &MarketModel, tr: &MartingaleTriple) -> Result<PricingSystem, PricingError> {
    let report = verify::verify_triple(model, tr);
    if !report.passed {
        return Err(PricingError::Contract(report));
    }
    let tree = model.tree();
    let deflator = deflator_from_rate(tree, &tr.rate)?;
    let mut z_r = AdaptedProcess::constant(tree, Rational::zero());
    for (w, p) in &tr.measure {
        z_r.set(*w, p / (tree.node_prob(*w) * deflator.at(*w)));
    }
    for node in tree.node_ids().rev().filter(|&n| !tree.is_terminal(n)) {
        let factor = tr.rate.next(node).expect("non-terminal node has a rate");
        let v = factor * one_step_mean(model, &z_r, node);
        z_r.set(node, v);
    }
    let z_s = AdaptedProcess::from_fn(tree, |n| &tr.price[n] * &z_r[n]);
    Ok(PricingSystem {
        z_r,
        z_s,
        rate: tr.rate.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::strategy::tests::one_period;

    fn system(m: &MarketModel) -> PricingSystem {
        match construct(m).unwrap() {
            Construction::System(ps) => ps,
            Construction::NoSystem => panic!("expected a pricing system"),
        }
    }

    #[test]
    fn one_period_program_shape() {
        let m = one_period(90, 100, 110, 95, int(0), int(0));
        let PricingLp { lp, .. } = build_pricing_lp(&m).unwrap();
        assert_eq!(lp.num_vars(), 7);
        assert_eq!(lp.num_constraints(), 12);
    }

    #[test]
    fn symmetric_binomial() {
        let m = one_period(100, 100, 120, 80, int(0), int(0));
        let ps = system(&m);
        assert_eq!(ps.z_r.values(), &[int(1), int(1), int(1)]);
        assert_eq!(ps.z_s.values(), &[int(100), int(120), int(80)]);
        let tr = system_to_triple(&m, &ps).unwrap();
        assert_eq!(
            tr.measure.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>(),
            vec![ratio(1, 2); 2]
        );
        assert_eq!(tr.price.values(), &[int(100), int(120), int(80)]);
    }

    #[test]
    fn dominated_stock_has_no_system() {
        let m = one_period(100, 100, 110, 105, int(0), int(0));
        assert_eq!(construct(&m).unwrap(), Construction::NoSystem);
    }

    #[test]
    fn spread_at_root_gives_one_third() {
        let m = one_period(90, 100, 110, 95, int(0), int(0));
        let tr = system_to_triple(&m, &system(&m)).unwrap();
        // S_0 ∈ [90, 100] and p·110 + (1 − p)·95 = S_0 gives p ∈ (0, 1/3]
        let p = tr.prob(NodeId(1)).unwrap();
        assert!(p.is_positive() && *p <= ratio(1, 3));
    }

    #[test]
    fn rate_band_example_triple_to_system() {
        let m = one_period(100, 100, 120, 100, int(0), ratio(1, 10));
        assert!(matches!(construct(&m).unwrap(), Construction::System(_)));
        let tree = m.tree();
        let tr = MartingaleTriple {
            measure: vec![(NodeId(1), ratio(1, 4)), (NodeId(2), ratio(3, 4))],
            price: AdaptedProcess::new(tree, vec![int(100), int(120), int(100)]).unwrap(),
            rate: PredictableProcess::constant(tree, int(1), ratio(105, 100)),
        };
        let ps = triple_to_system(&m, &tr).unwrap();
        assert_eq!(ps.z_r[NodeId(1)], ratio(10, 21));
        assert_eq!(ps.z_r[NodeId(2)], ratio(10, 7));
        assert_eq!(ps.z_r[NodeId(0)], int(1));
        assert_eq!(system_to_triple(&m, &ps).unwrap(), tr);
    }

    #[test]
    fn tampered_input_is_rejected() {
        let m = one_period(100, 100, 120, 80, int(0), int(0));
        let mut ps = system(&m);
        ps.z_s.set(NodeId(1), int(121));
        assert!(matches!(system_to_triple(&m, &ps), Err(PricingError::Contract(_))));
    }
}
