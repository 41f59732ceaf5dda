//! Acceptance criteria 1 to 8, each printed as one PASS or FAIL line. Every
//! comparison is exact; the process exits non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use arbcheck_core::detector::detect;
use arbcheck_core::io::generator::random_strategy;
use arbcheck_core::lp::{self, Bounds, LinearProgram, LpOutcome, Relation};
use arbcheck_core::pricing::{construct, system_to_triple, triple_to_system, Construction};
use arbcheck_core::rational::{int, Display as Q};
use arbcheck_core::strategy::{cone_combine, is_self_financing};
use arbcheck_core::verify::{
    verify_arbitrage_dichotomy, verify_pricing_system, verify_strategy, verify_supermartingale, verify_triple,
    Condition, Location, VerificationReport,
};
use arbcheck_core::{MarketModel, MartingaleTriple, NodeId, PricingSystem, Rational};
use common::*;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn triple_of(model: &MarketModel) -> Option<(PricingSystem, MartingaleTriple)> {
    match construct(model).expect("construct runs on valid models") {
        Construction::System(ps) => {
            let tr = system_to_triple(model, &ps).expect("constructed system converts");
            Some((ps, tr))
        }
        Construction::NoSystem => None,
    }
}

fn dichotomy_campaign() -> Outcome {
    const MODELS: u64 = 500;
    let start = Instant::now();
    let mut arbitrage = 0;
    let mut largest = 0;
    for seed in 0..MODELS {
        let model = campaign_model(seed);
        let tree = model.tree();
        ensure!(
            tree.horizon() <= 4 && tree.len() <= 121,
            "seed {seed}: model exceeds desk scale"
        );
        largest = largest.max(tree.len());
        let report = detect(&model).map_err(|e| format!("seed {seed}: detect failed: {e}"))?;
        let construction = construct(&model).map_err(|e| format!("seed {seed}: construct failed: {e}"))?;
        let check = verify_arbitrage_dichotomy(&model, &report, &construction);
        ensure!(check.passed, "seed {seed}: dichotomy violations {:?}", check.violations);
        if report.is_arbitrage() {
            arbitrage += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed <= Duration::from_secs(60), "took {elapsed:?}, limit 60 s");
    Ok(format!(
        "{MODELS} models up to {largest} nodes, {arbitrage} arbitrage / {} triple, 0 exceptions, {:.1} s",
        MODELS - arbitrage,
        elapsed.as_secs_f64()
    ))
}

fn frictionless_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut inside, mut outside) = (0, 0);
    for case in 0..300 {
        let s0 = int(rng.gen_range(50..=150));
        let r = Rational::one() + q(rng.gen_range(0..=4) * 125, 10_000);
        let grown = &s0 * &r;
        let down = match rng.gen_range(0..4) {
            0 => grown.clone(),
            1 => &grown - int(rng.gen_range(1..=40)),
            _ => &grown - int(rng.gen_range(-20..=40)),
        };
        let up = match rng.gen_range(0..4) {
            0 => grown.clone(),
            _ => &down + int(rng.gen_range(1..=60)),
        };
        if up <= down || down <= Rational::zero() {
            continue;
        }
        let qu = q(rng.gen_range(1..=9), 10);
        let model = one_period_with(
            (s0.clone(), s0.clone()),
            &r - int(1),
            &r - int(1),
            &[
                (qu.clone(), up.clone(), up.clone()),
                (int(1) - &qu, down.clone(), down.clone()),
            ],
        );
        let p = risk_neutral_up(&s0, &r, &up, &down);
        let arbitrage = detect(&model).map_err(|e| e.to_string())?.is_arbitrage();
        ensure!(
            arbitrage != in_open_unit(&p),
            "case {case}: p = {} but arbitrage = {arbitrage}",
            Q(&p)
        );
        match triple_of(&model) {
            Some((_, tr)) => {
                ensure!(in_open_unit(&p), "case {case}: triple found although p = {}", Q(&p));
                let got = tr.prob(NodeId(1)).cloned().unwrap_or_default();
                ensure!(got == p, "case {case}: triple probability {} != {}", Q(&got), Q(&p));
                ensure!(
                    verify_triple(&model, &tr).passed,
                    "case {case}: triple fails verification"
                );
                inside += 1;
            }
            None => {
                ensure!(!in_open_unit(&p), "case {case}: no triple although p = {}", Q(&p));
                outside += 1;
            }
        }
    }
    ensure!(
        inside >= 50 && outside >= 50,
        "too few cases: {inside} inside, {outside} outside"
    );
    Ok(format!(
        "{inside} binomials with p in (0,1) matched exactly, {outside} outside reported as arbitrage"
    ))
}

/// Hand-checked one-period instances: root (bid, ask), rates (deposit,
/// credit), terminal (bid, ask) pairs, expected absence of arbitrage.
#[allow(clippy::type_complexity)]
fn hand_instances() -> Vec<(&'static str, MarketModel, bool)> {
    let z = || int(0);
    let pt = |b: i64, a: i64| (q(1, 2), int(b), int(a));
    let one = |b: i64, a: i64| vec![(int(1), int(b), int(a))];
    let m = |b0: i64, a0: i64, rd: Rational, rc: Rational, t: Vec<(Rational, Rational, Rational)>| {
        one_period_with((int(b0), int(a0)), rd, rc, &t)
    };
    vec![
        ("dominated stock", dominated_stock(), false),
        ("spread at root", spread_at_root(), true),
        ("credit rate band", credit_rate_band(), true),
        ("symmetric frictionless", binomial(100, 100, 120, 80, z(), z()), true),
        ("down move equals price", binomial(100, 100, 120, 100, z(), z()), false),
        ("up move equals price", binomial(100, 100, 100, 80, z(), z()), false),
        (
            "riskless stock at zero rate",
            binomial(100, 100, 100, 100, z(), z()),
            true,
        ),
        (
            "riskless stock below deposit growth",
            binomial(100, 100, 100, 100, q(1, 20), q(1, 20)),
            false,
        ),
        (
            "riskless stock at the rate",
            binomial(100, 100, 110, 110, q(1, 10), q(1, 10)),
            true,
        ),
        (
            "single child overlapping band",
            m(99, 101, z(), z(), one(100, 102)),
            true,
        ),
        ("single child above band", m(99, 101, z(), z(), one(102, 103)), false),
        ("single child touching band", m(99, 101, z(), z(), one(101, 103)), true),
        (
            "terminal spreads around price",
            m(100, 100, z(), z(), vec![pt(95, 105), pt(96, 104)]),
            true,
        ),
        (
            "equal terminal bids at price",
            m(100, 100, z(), z(), vec![pt(100, 110), pt(100, 120)]),
            true,
        ),
        (
            "unequal terminal bids at price",
            m(100, 100, z(), z(), vec![pt(100, 110), pt(101, 120)]),
            false,
        ),
        (
            "credit rate too low",
            binomial(100, 100, 130, 110, z(), q(1, 10)),
            false,
        ),
        (
            "credit rate wide enough",
            binomial(100, 100, 130, 110, z(), q(3, 20)),
            true,
        ),
        (
            "deposit growth above all outcomes",
            binomial(100, 100, 90, 80, q(1, 10), q(1, 5)),
            false,
        ),
        ("bid above all outcomes", binomial(90, 100, 80, 85, z(), z()), false),
        (
            "equal terminal asks at bid",
            m(90, 100, z(), z(), vec![pt(80, 90), pt(85, 90)]),
            true,
        ),
    ]
}

fn random_one_period(rng: &mut ChaCha8Rng) -> MarketModel {
    let bid0 = rng.gen_range(8..=12);
    let ask0 = bid0 + rng.gen_range(0..=2);
    let rd = q(rng.gen_range(0..=1), 10);
    let rc = &rd + q(rng.gen_range(0..=1), 10);
    let k = rng.gen_range(1..=4);
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
    let total: i64 = weights.iter().sum();
    let terminals: Vec<_> = weights
        .iter()
        .map(|&w| {
            let b = rng.gen_range(6..=14);
            let a = b + [0, 0, 1, 2][rng.gen_range(0..4)];
            (q(w, total), int(b), int(a))
        })
        .collect();
    one_period_with((int(bid0), int(ask0)), rd, rc, &terminals)
}

fn interval_oracle() -> Outcome {
    for (name, model, expected) in hand_instances() {
        ensure!(
            interval_oracle_no_arbitrage(&model) == expected,
            "oracle wrong on hand instance {name:?}"
        );
        let arbitrage = detect(&model).map_err(|e| e.to_string())?.is_arbitrage();
        ensure!(arbitrage != expected, "detect disagrees on hand instance {name:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut free = 0;
    const MODELS: usize = 400;
    for case in 0..MODELS {
        let model = random_one_period(&mut rng);
        let oracle = interval_oracle_no_arbitrage(&model);
        let arbitrage = detect(&model).map_err(|e| e.to_string())?.is_arbitrage();
        ensure!(
            oracle != arbitrage,
            "case {case}: oracle says no-arbitrage = {oracle}, detect says arbitrage = {arbitrage}"
        );
        free += usize::from(oracle);
    }
    Ok(format!(
        "oracle right on 20 hand instances; {MODELS} random models agree ({free} arbitrage-free, {} arbitrage)",
        MODELS - free
    ))
}

fn cone_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    const PAIRS: usize = 1000;
    for pair in 0..PAIRS {
        let model = campaign_model(pair as u64 % 200);
        let (c1, c2) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
        let s1 = random_strategy(&model, &mut rng, c1);
        let s2 = random_strategy(&model, &mut rng, c2);
        let mut weight = || {
            if rng.gen_bool(0.1) {
                Rational::zero()
            } else {
                q(rng.gen_range(1..=60), rng.gen_range(1..=7))
            }
        };
        let (l1, l2) = (weight(), weight());
        let sum = cone_combine(&s1, &s2, &l1, &l2).map_err(|e| e.to_string())?;
        let scaled = s1.scale(&l1);
        for (what, s) in [
            ("inputs", &s1),
            ("inputs", &s2),
            ("combination", &sum),
            ("scaling", &scaled),
        ] {
            let sf = is_self_financing(&model, s).map_err(|e| e.to_string())?;
            ensure!(sf, "pair {pair}: {what} not self-financing");
            ensure!(
                verify_strategy(&model, s).passed,
                "pair {pair}: verifier rejects {what}"
            );
        }
    }
    Ok(format!(
        "{PAIRS} strategy pairs: combinations and scalings self-financing"
    ))
}

/// `(α R + β S) / B` at `node` for the portfolio held into it, from the
/// triple's price and growth factors.
fn deflated_value(
    model: &MarketModel,
    tr: &MartingaleTriple,
    s: &arbcheck_core::TradingStrategy,
    node: NodeId,
) -> Rational {
    let tree = model.tree();
    let held = s.held_into(model, node);
    let b: Rational = tree.path(node).iter().map(|&n| tr.rate.at(tree, n)).product();
    (&held.cash * tr.rate.at(tree, node) + &held.shares * &tr.price[node]) / b
}

fn is_martingale(model: &MarketModel, tr: &MartingaleTriple, s: &arbcheck_core::TradingStrategy) -> bool {
    let tree = model.tree();
    let mut mass = vec![Rational::zero(); tree.len()];
    for (w, p) in &tr.measure {
        for n in tree.path(*w) {
            mass[n.0] += p;
        }
    }
    tree.non_terminals().all(|n| {
        let next: Rational = tree
            .children(n)
            .iter()
            .map(|&c| &mass[c.0] * deflated_value(model, tr, s, c))
            .sum::<Rational>()
            / &mass[n.0];
        deflated_value(model, tr, s, n) == next
    })
}

fn supermartingale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut spread_models = 0;
    let mut seed = 0;
    while spread_models < 50 {
        let model = campaign_model(seed);
        seed += 1;
        let Some((_, tr)) = triple_of(&model) else { continue };
        for i in 0..100 {
            let s = random_strategy(&model, &mut rng, i % 2 == 1);
            let r = verify_supermartingale(&model, &tr, &s).map_err(|e| e.to_string())?;
            ensure!(
                r.passed,
                "seed {}: strategy {i} breaks the supermartingale inequality: {:?}",
                seed - 1,
                r.violations
            );
        }
        spread_models += 1;
    }
    let mut frictionless = 0;
    let mut seed = 0;
    while frictionless < 20 {
        let model = frictionless_model(seed);
        seed += 1;
        ensure!(
            model.is_frictionless(),
            "generator produced spreads in frictionless mode"
        );
        let Some((_, tr)) = triple_of(&model) else { continue };
        for _ in 0..100 {
            let s = random_strategy(&model, &mut rng, false);
            let r = verify_supermartingale(&model, &tr, &s).map_err(|e| e.to_string())?;
            ensure!(r.passed, "frictionless seed {}: inequality fails", seed - 1);
            ensure!(
                is_martingale(&model, &tr, &s),
                "frictionless seed {}: strict inequality",
                seed - 1
            );
        }
        frictionless += 1;
    }
    Ok(format!(
        "{spread_models} models x 100 strategies hold exactly; equality on {frictionless} frictionless models x 100"
    ))
}

fn round_trips() -> Outcome {
    let mut done = 0;
    let mut seed = 0;
    while done < 100 {
        let model = campaign_model(seed);
        seed += 1;
        let Some((ps, tr)) = triple_of(&model) else { continue };
        let back = triple_to_system(&model, &tr).map_err(|e| e.to_string())?;
        ensure!(back == ps, "seed {}: system -> triple -> system differs", seed - 1);
        let again = system_to_triple(&model, &back).map_err(|e| e.to_string())?;
        ensure!(again == tr, "seed {}: triple -> system -> triple differs", seed - 1);
        ensure!(
            verify_pricing_system(&model, &ps).passed,
            "seed {}: system fails verification",
            seed - 1
        );
        done += 1;
    }
    Ok(format!(
        "{done} constructed instances round-trip exactly in both orders"
    ))
}

/// A random LP whose rows mostly pass through one integer point, so the
/// vertex there is highly degenerate.
fn degenerate_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(2..=7);
    let m = rng.gen_range(n..=3 * n);
    let x0: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
    let mut lp = LinearProgram::new((0..n).map(|_| int(rng.gen_range(-5..=5))).collect());
    for j in 0..n {
        if rng.gen_bool(0.7) {
            lp.set_bounds(j, Bounds::non_negative());
        }
    }
    for _ in 0..m {
        let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
        let at: i64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let (rel, rhs) = match rng.gen_range(0..10) {
            0 => (Relation::Eq, at),
            1..=3 => (Relation::Ge, at - rng.gen_range(0..=1)),
            _ => (Relation::Le, at + i64::from(rng.gen_bool(0.2))),
        };
        lp.add_constraint(a.into_iter().map(int).collect(), rel, int(rhs));
    }
    // a contradicting pair through the same degenerate vertex
    if rng.gen_bool(0.2) {
        let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-4..=4)).collect();
        let at: i64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
        lp.add_constraint(a.iter().copied().map(int).collect(), Relation::Le, int(at));
        lp.add_constraint(a.into_iter().map(int).collect(), Relation::Ge, int(at + 1));
    }
    lp
}

/// Beale's example, on which the largest-coefficient rule cycles.
fn beale() -> LinearProgram {
    let mut lp = LinearProgram::new(vec![q(3, 4), int(-20), q(1, 2), int(-6)]);
    for j in 0..4 {
        lp.set_bounds(j, Bounds::non_negative());
    }
    lp.add_constraint(vec![q(1, 4), int(-8), int(-1), int(9)], Relation::Le, int(0));
    lp.add_constraint(vec![q(1, 2), int(-12), q(-1, 2), int(3)], Relation::Le, int(0));
    lp.add_constraint(vec![int(0), int(0), int(1), int(0)], Relation::Le, int(1));
    lp
}

fn certificate_integrity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; 3];
    let mut worst = 0.0f64;
    let mut programs: Vec<LinearProgram> = (0..100).map(|_| degenerate_lp(&mut rng)).collect();
    programs.push(beale());
    for (i, lp) in programs.iter().enumerate() {
        let (out, stats) = lp::solve_with_stats(lp).map_err(|e| format!("program {i}: {e}"))?;
        let size = lp.num_constraints() + lp.num_vars();
        let budget = 10 * size * size;
        ensure!(
            stats.pivots <= budget,
            "program {i}: {} pivots over budget {budget}",
            stats.pivots
        );
        worst = worst.max(stats.pivots as f64 / budget as f64);
        if let Some(e) = lp::certificate_error(lp, &out) {
            return Err(format!("program {i}: certificate rejected: {e}"));
        }
        counts[match out {
            LpOutcome::Optimal { .. } => 0,
            LpOutcome::Unbounded { .. } => 1,
            LpOutcome::Infeasible { .. } => 2,
        }] += 1;
    }
    let LpOutcome::Optimal { objective, .. } = lp::solve(&beale()).map_err(|e| e.to_string())? else {
        return Err("Beale's example is bounded and feasible".into());
    };
    ensure!(objective == q(5, 4), "Beale's optimum {} != 5/4", Q(&objective));

    let mut market = 0;
    for seed in 0..40 {
        let model = common::campaign_model(seed);
        if model.tree().len() > 40 {
            continue;
        }
        let detection = arbcheck_core::detector::build_primal_lp(&model)
            .map_err(|e| e.to_string())?
            .lp;
        let pricing = arbcheck_core::pricing::build_pricing_lp(&model)
            .map_err(|e| e.to_string())?
            .lp;
        for lp in [&detection, &pricing] {
            let out = lp::solve(lp).map_err(|e| e.to_string())?;
            if let Some(e) = lp::certificate_error(lp, &out) {
                return Err(format!("market program of seed {seed}: {e}"));
            }
            market += 1;
        }
    }
    Ok(format!(
        "101 degenerate programs ({} optimal, {} unbounded, {} infeasible) certified, at most {:.1}% of the pivot budget; {market} market programs certified",
        counts[0],
        counts[1],
        counts[2],
        worst * 100.0
    ))
}

fn mutation_detection() -> Outcome {
    let (model, ps, tr) = (0..)
        .find_map(|seed| {
            let model = arbcheck_core::io::generator::generate(&arbcheck_core::io::GeneratorConfig {
                seed,
                horizon: (2, 2),
                branching: (2, 2),
                ..Default::default()
            })
            .unwrap();
            triple_of(&model).map(|(ps, tr)| (model, ps, tr))
        })
        .unwrap();
    let tree = model.tree();
    let root = tree.root();
    let inner = tree.children(root)[0];
    let (w1, w2) = (tree.children(inner)[0], tree.children(inner)[1]);
    let idx = |w: NodeId| tr.measure.iter().position(|(n, _)| *n == w).unwrap();
    let node = Location::Node;
    let mut cases: Vec<(&str, VerificationReport, Location, Condition)> = Vec::new();

    let mut t = tr.clone();
    t.price.set(inner, model.ask(inner) + int(1));
    cases.push((
        "price above ask",
        verify_triple(&model, &t),
        node(inner),
        Condition::PriceAtMostAsk,
    ));

    let mut t = tr.clone();
    t.price.set(w1, model.bid(w1) - q(1, 100));
    cases.push((
        "price below bid",
        verify_triple(&model, &t),
        node(w1),
        Condition::PriceAtLeastBid,
    ));

    let mut t = tr.clone();
    let (i1, i2) = (idx(w1), idx(w2));
    let shift = &t.measure[i1].1 / int(2);
    t.measure[i1].1 -= &shift;
    t.measure[i2].1 += &shift;
    cases.push((
        "measure shifted between siblings",
        verify_triple(&model, &t),
        node(inner),
        Condition::Martingale,
    ));

    let mut t = tr.clone();
    let p = t.measure[i1].1.clone();
    t.measure[i1].1 = Rational::zero();
    t.measure[i2].1 += &p;
    cases.push((
        "zero probability",
        verify_triple(&model, &t),
        node(w1),
        Condition::ProbabilityPositive,
    ));

    let mut t = tr.clone();
    t.measure[i1].1 = -&p;
    t.measure[i2].1 += &p * int(2);
    cases.push((
        "negative probability",
        verify_triple(&model, &t),
        node(w1),
        Condition::ProbabilityPositive,
    ));

    let mut t = tr.clone();
    for e in &mut t.measure {
        e.1 *= int(2);
    }
    cases.push((
        "probabilities sum to 2",
        verify_triple(&model, &t),
        Location::Global,
        Condition::ProbabilitySum,
    ));

    let (_, rc) = model.next_factors(root).unwrap();
    let mut t = tr.clone();
    t.rate.set_next(root, &rc + q(1, 100));
    cases.push((
        "rate above credit",
        verify_triple(&model, &t),
        node(root),
        Condition::RateAtMostCredit,
    ));

    let (rd_inner, _) = model.next_factors(inner).unwrap();
    let mut t = tr.clone();
    t.rate.set_next(inner, &rd_inner - q(1, 100));
    cases.push((
        "rate below deposit",
        verify_triple(&model, &t),
        node(inner),
        Condition::RateAtLeastDeposit,
    ));

    let mut s = ps.clone();
    s.z_s.set(w2, &s.z_s[w2] * q(101, 100));
    cases.push((
        "stock density bumped at a leaf",
        verify_pricing_system(&model, &s),
        node(inner),
        Condition::StockMartingale,
    ));

    let mut s = ps.clone();
    s.z_s.set(inner, model.ask(inner) * &s.z_r[inner] + int(1));
    cases.push((
        "stock density above ask",
        verify_pricing_system(&model, &s),
        node(inner),
        Condition::DensityAtMostAsk,
    ));

    ensure!(
        verify_triple(&model, &tr).passed && verify_pricing_system(&model, &ps).passed,
        "untampered inputs fail"
    );
    for (name, report, location, condition) in &cases {
        ensure!(!report.passed, "tampering {name:?} not detected");
        ensure!(
            report.has(*location, *condition),
            "tampering {name:?} reported as {:?}",
            report.violations
        );
    }
    Ok(format!(
        "{} tamperings caught at the expected location and condition",
        cases.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("dichotomy on generated models", dichotomy_campaign),
        ("frictionless binomial reduction", frictionless_reduction),
        ("one-period interval oracle", interval_oracle),
        ("self-financing cone", cone_properties),
        ("supermartingale property", supermartingale),
        ("triple and pricing system round trips", round_trips),
        ("LP certificate integrity", certificate_integrity),
        ("mutation detection", mutation_detection),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
