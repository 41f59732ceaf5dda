//! Model builders and independent oracles shared by the integration tests.

#![allow(dead_code)]

use arbcheck_core::io::generator::{generate, GeneratorConfig, GeneratorMode, RationalRange};
use arbcheck_core::rational::{int, ratio};
use arbcheck_core::tree::NodeSpec;
use arbcheck_core::{AdaptedProcess, EventTree, MarketModel, PredictableProcess, Rational};
use num_traits::{One, Zero};

pub fn q(n: i64, d: i64) -> Rational {
    ratio(n, d)
}

/// One period with terminal `(bid, ask)` pairs at the given probabilities.
pub fn one_period_with(
    root: (Rational, Rational),
    deposit: Rational,
    credit: Rational,
    terminals: &[(Rational, Rational, Rational)],
) -> MarketModel {
    let mut specs = vec![NodeSpec {
        parent: None,
        prob: Rational::one(),
    }];
    for (p, _, _) in terminals {
        specs.push(NodeSpec {
            parent: Some(0),
            prob: p.clone(),
        });
    }
    let tree = EventTree::new(specs).unwrap();
    let mut bid = vec![root.0];
    let mut ask = vec![root.1];
    for (_, b, a) in terminals {
        bid.push(b.clone());
        ask.push(a.clone());
    }
    let bid = AdaptedProcess::new(&tree, bid).unwrap();
    let ask = AdaptedProcess::new(&tree, ask).unwrap();
    let dep = PredictableProcess::constant(&tree, int(0), deposit);
    let cred = PredictableProcess::constant(&tree, int(0), credit);
    MarketModel::new(tree, bid, ask, dep, cred).unwrap()
}

/// Equiprobable binomial with spread only at the root and one rate band.
pub fn binomial(bid0: i64, ask0: i64, up: i64, down: i64, deposit: Rational, credit: Rational) -> MarketModel {
    let half = q(1, 2);
    one_period_with(
        (int(bid0), int(ask0)),
        deposit,
        credit,
        &[(half.clone(), int(up), int(up)), (half, int(down), int(down))],
    )
}

/// Ask 100 at the root, terminal prices 110 and 105, zero rates: buying the
/// stock on credit pays 10 or 5.
pub fn dominated_stock() -> MarketModel {
    binomial(100, 100, 110, 105, int(0), int(0))
}

/// Bid 90, ask 100 at the root, terminals 110 and 95, zero rates: the only
/// triple prices the root at 100 with up-probability 1/3.
pub fn spread_at_root() -> MarketModel {
    binomial(90, 100, 110, 95, int(0), int(0))
}

/// Price 100 at the root, terminals 120 and 100, deposit rate 0 and credit
/// rate 10%: R = 1.05 with up-probability 1/4 is a triple.
pub fn credit_rate_band() -> MarketModel {
    binomial(100, 100, 120, 100, int(0), q(1, 10))
}

/// One-period no-arbitrage oracle: the discounted-price interval
/// `[R^d S^b_0, R^c S^a_0]` must meet the set of means of terminal prices
/// under equivalent measures, which runs from `L = min S^b_1` to
/// `U = max S^a_1`. `L` belongs to that set only when every terminal bid
/// equals `L`, and `U` only when every terminal ask equals `U`.
pub fn interval_oracle_no_arbitrage(model: &MarketModel) -> bool {
    let tree = model.tree();
    let root = tree.root();
    let (rd, rc) = model.next_factors(root).expect("one-period model");
    let lo = rd * model.bid(root);
    let hi = rc * model.ask(root);
    let kids = tree.children(root);
    let l = kids.iter().map(|&c| model.bid(c)).min().unwrap().clone();
    let u = kids.iter().map(|&c| model.ask(c)).max().unwrap().clone();
    let l_closed = kids.iter().all(|&c| *model.bid(c) == l);
    let u_closed = kids.iter().all(|&c| *model.ask(c) == u);
    let above_l = if l_closed { hi >= l } else { hi > l };
    let below_u = if u_closed { lo <= u } else { lo < u };
    above_l && below_u
}

/// Classical one-period risk-neutral up-probability `(S_0 R − S_d) / (S_u − S_d)`.
pub fn risk_neutral_up(s0: &Rational, r: &Rational, up: &Rational, down: &Rational) -> Rational {
    (s0 * r - down) / (up - down)
}

pub fn in_open_unit(p: &Rational) -> bool {
    *p > Rational::zero() && *p < Rational::one()
}

/// Generator settings of the mixed campaign: horizon 1 to 4, one to three
/// children, odd seeds in arbitrage-prone mode.
pub fn campaign_config(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        horizon: (1, 4),
        branching: (1, 3),
        mode: if seed.is_multiple_of(2) {
            GeneratorMode::Unconstrained
        } else {
            GeneratorMode::ArbitrageProne
        },
        ..GeneratorConfig::default()
    }
}

pub fn campaign_model(seed: u64) -> MarketModel {
    generate(&campaign_config(seed)).unwrap()
}

/// Zero spread and a single rate per period.
pub fn frictionless_model(seed: u64) -> MarketModel {
    generate(&GeneratorConfig {
        seed,
        horizon: (1, 3),
        branching: (2, 3),
        spread: RationalRange::point(Rational::zero()),
        rate_gap: RationalRange::point(Rational::zero()),
        ..GeneratorConfig::default()
    })
    .unwrap()
}
