//! JSON model documents and certificates.
//!
//! Rationals are always JSON strings: integers, exact decimals (`"99.5"`) or
//! fractions (`"1/3"`). A model document lists nodes with an id, the parent id
//! (absent on the root), the conditional probability (absent on the root),
//! bid and ask, and on non-terminal nodes the deposit and credit rates for
//! the following period:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "nodes": [
//!     { "id": 0, "bid": "90", "ask": "100", "deposit_rate": "0", "credit_rate": "0" },
//!     { "id": 1, "parent": 0, "prob": "1/2", "bid": "110", "ask": "110" },
//!     { "id": 2, "parent": 0, "prob": "1/2", "bid": "95", "ask": "95" }
//!   ]
//! }
//! ```
//!
//! Nodes may appear in any order and ids may be any distinct non-negative
//! integers. Parsing renumbers them in time-major order (ties broken by
//! position in the file); that numbering is what certificates refer to. A
//! document is canonical when its ids already are that numbering, and
//! canonical documents survive a parse/serialize round trip byte for byte.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::detector::{DiscountEntry, DiscountFactor};
use crate::market::{MarketModel, ModelError};
use crate::pricing::{MartingaleTriple, PricingSystem};
use crate::rational::{serde_str, Rational};
use crate::strategy::{Portfolio, TradingStrategy};
use crate::tree::{AdaptedProcess, EventTree, NodeId, NodeSpec, PredictableProcess, TreeError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatedError {
    /// JSON path of the offending value, such as `nodes[2].bid`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for LocatedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentError(pub Vec<LocatedError>);

impl DocumentError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![LocatedError {
            path: path.into(),
            message: message.into(),
        }])
    }
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for DocumentError {}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "$".to_string() } else { path };
        DocumentError::at(path, e.into_inner().to_string())
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("documents serialize");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format_version: u32,
    pub nodes: Vec<NodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    #[serde(default, with = "serde_str::option", skip_serializing_if = "Option::is_none")]
    pub prob: Option<Rational>,
    #[serde(with = "serde_str")]
    pub bid: Rational,
    #[serde(with = "serde_str")]
    pub ask: Rational,
    #[serde(default, with = "serde_str::option", skip_serializing_if = "Option::is_none")]
    pub deposit_rate: Option<Rational>,
    #[serde(default, with = "serde_str::option", skip_serializing_if = "Option::is_none")]
    pub credit_rate: Option<Rational>,
}

fn node_path(i: usize, field: &str) -> String {
    format!("nodes[{i}].{field}")
}

fn tree_error_node(e: &TreeError) -> Option<NodeId> {
    match e {
        TreeError::ExtraRoot(n)
        | TreeError::NotTimeMajor(n)
        | TreeError::RootProbability(n)
        | TreeError::UnknownNode(n)
        | TreeError::NotTerminal(n)
        | TreeError::Terminal(n)
        | TreeError::PredictableShape(n) => Some(*n),
        TreeError::ParentOutOfOrder { node, .. }
        | TreeError::NonPositiveProbability { node, .. }
        | TreeError::ProbabilitySum { node, .. }
        | TreeError::PrematureLeaf { node, .. } => Some(*node),
        TreeError::Empty | TreeError::MissingRoot | TreeError::LengthMismatch { .. } => None,
    }
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        from_json(text)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// Builds and validates the model. Errors name the offending entry by
    /// its position in `nodes`.
    pub fn to_model(&self) -> Result<MarketModel, DocumentError> {
        if self.format_version != FORMAT_VERSION {
            return Err(DocumentError::at(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.format_version),
            ));
        }
        if self.nodes.is_empty() {
            return Err(DocumentError::at("nodes", "model has no nodes"));
        }
        let mut errors = Vec::new();
        let push =
            |errors: &mut Vec<LocatedError>, path: String, message: String| errors.push(LocatedError { path, message });

        let mut position: HashMap<u64, usize> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if position.insert(n.id, i).is_some() {
                push(&mut errors, node_path(i, "id"), format!("duplicate id {}", n.id));
            }
        }
        let roots: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].parent.is_none())
            .collect();
        if roots.len() != 1 {
            push(
                &mut errors,
                "nodes".into(),
                format!("expected exactly one root, found {}", roots.len()),
            );
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                match position.get(&p) {
                    Some(&j) => children[j].push(i),
                    None => push(&mut errors, node_path(i, "parent"), format!("unknown parent id {p}")),
                }
            }
        }
        if !errors.is_empty() {
            return Err(DocumentError(errors));
        }

        // time-major order, ties by position in the file
        let mut depth = vec![usize::MAX; self.nodes.len()];
        let mut frontier = vec![roots[0]];
        depth[roots[0]] = 0;
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &i in &frontier {
                for &c in &children[i] {
                    depth[c] = d;
                    next.push(c);
                }
            }
            frontier = next;
        }
        if let Some(i) = depth.iter().position(|&d| d == usize::MAX) {
            return Err(DocumentError::at(
                node_path(i, "parent"),
                "node is not reachable from the root",
            ));
        }
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| (depth[i], i));
        let mut index_of = vec![0; self.nodes.len()];
        for (k, &i) in order.iter().enumerate() {
            index_of[i] = k;
        }

        let mut specs = Vec::with_capacity(order.len());
        for &i in &order {
            let n = &self.nodes[i];
            let terminal = children[i].is_empty();
            let prob = match (n.parent, &n.prob) {
                (None, None) => Rational::one(),
                (None, Some(_)) => {
                    push(
                        &mut errors,
                        node_path(i, "prob"),
                        "the root has no conditional probability".into(),
                    );
                    Rational::one()
                }
                (Some(_), Some(p)) => p.clone(),
                (Some(_), None) => {
                    push(
                        &mut errors,
                        node_path(i, "prob"),
                        "missing conditional probability".into(),
                    );
                    Rational::one()
                }
            };
            for (field, v) in [("deposit_rate", &n.deposit_rate), ("credit_rate", &n.credit_rate)] {
                match (terminal, v) {
                    (true, Some(_)) => push(&mut errors, node_path(i, field), "terminal nodes carry no rates".into()),
                    (false, None) => push(
                        &mut errors,
                        node_path(i, field),
                        "missing rate for the next period".into(),
                    ),
                    _ => {}
                }
            }
            specs.push(NodeSpec {
                parent: n.parent.map(|p| index_of[position[&p]]),
                prob,
            });
        }
        if !errors.is_empty() {
            return Err(DocumentError(errors));
        }
        let locate = |node: NodeId, field: &str| node_path(order[node.0], field);
        let tree = EventTree::new(specs).map_err(|e| match (&e, tree_error_node(&e)) {
            (TreeError::ProbabilitySum { .. } | TreeError::PrematureLeaf { .. }, Some(node)) => {
                DocumentError::at(format!("nodes[{}]", order[node.0]), e.to_string())
            }
            (_, Some(node)) => DocumentError::at(locate(node, "prob"), e.to_string()),
            (_, None) => DocumentError::at("nodes", e.to_string()),
        })?;
        let field = |f: fn(&NodeEntry) -> &Option<Rational>| {
            PredictableProcess::from_fn(&tree, Rational::zero(), |n| {
                f(&self.nodes[order[n.0]]).clone().expect("checked above")
            })
        };
        let deposit = field(|n| &n.deposit_rate);
        let credit = field(|n| &n.credit_rate);
        let bid = AdaptedProcess::from_fn(&tree, |n| self.nodes[order[n.0]].bid.clone());
        let ask = AdaptedProcess::from_fn(&tree, |n| self.nodes[order[n.0]].ask.clone());
        MarketModel::new(tree, bid, ask, deposit, credit).map_err(|e| match e {
            ModelError::Invalid(vs) => DocumentError(
                vs.into_iter()
                    .map(|v| {
                        let field = match v.kind {
                            crate::market::ViolationKind::NonPositiveBid(_) => "bid",
                            crate::market::ViolationKind::AskBelowBid { .. } => "ask",
                            crate::market::ViolationKind::DepositRateTooLow(_) => "deposit_rate",
                            crate::market::ViolationKind::CreditBelowDeposit { .. } => "credit_rate",
                            crate::market::ViolationKind::NonZeroInitialRate { .. } => "deposit_rate",
                        };
                        LocatedError {
                            path: locate(v.node, field),
                            message: v.to_string(),
                        }
                    })
                    .collect(),
            ),
            other => DocumentError::at("nodes", other.to_string()),
        })
    }

    /// Canonical document for a model: ids are node indices.
    pub fn from_model(model: &MarketModel) -> Self {
        let tree = model.tree();
        let nodes = tree
            .node_ids()
            .map(|n| NodeEntry {
                id: n.0 as u64,
                parent: tree.parent(n).map(|p| p.0 as u64),
                prob: tree.parent(n).map(|_| tree.cond_prob(n).clone()),
                bid: model.bid(n).clone(),
                ask: model.ask(n).clone(),
                deposit_rate: model.deposit_rates().next(n).cloned(),
                credit_rate: model.credit_rates().next(n).cloned(),
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            nodes,
        }
    }
}

pub fn parse_model(text: &str) -> Result<MarketModel, DocumentError> {
    ModelDocument::parse(text)?.to_model()
}

pub fn serialize_model(model: &MarketModel) -> String {
    ModelDocument::from_model(model).to_json()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldingEntry {
    pub node: usize,
    #[serde(with = "serde_str")]
    pub cash: Rational,
    #[serde(with = "serde_str")]
    pub shares: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityEntry {
    pub node: usize,
    #[serde(with = "serde_str")]
    pub prob: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceEntry {
    pub node: usize,
    #[serde(with = "serde_str")]
    pub price: Rational,
    /// Simple rate for the following period; non-terminal nodes only.
    #[serde(default, with = "serde_str::option", skip_serializing_if = "Option::is_none")]
    pub rate: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityEntry {
    pub node: usize,
    #[serde(with = "serde_str")]
    pub z_r: Rational,
    #[serde(with = "serde_str")]
    pub z_s: Rational,
    /// Simple rate for the following period; non-terminal nodes only.
    #[serde(default, with = "serde_str::option", skip_serializing_if = "Option::is_none")]
    pub rate: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscountDocEntry {
    pub node: usize,
    #[serde(with = "serde_str")]
    pub cash: Rational,
    #[serde(with = "serde_str")]
    pub stock: Rational,
}

/// A certificate bound to a model through its content hash. Rates inside
/// certificates are simple rates `r`, with growth factor `1 + r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Certificate {
    Arbitrage {
        format_version: u32,
        model_hash: String,
        #[serde(with = "serde_str")]
        initial_cash: Rational,
        holdings: Vec<HoldingEntry>,
    },
    MartingaleTriple {
        format_version: u32,
        model_hash: String,
        #[serde(with = "serde_str")]
        initial_rate: Rational,
        measure: Vec<ProbabilityEntry>,
        nodes: Vec<PriceEntry>,
    },
    PricingSystem {
        format_version: u32,
        model_hash: String,
        #[serde(with = "serde_str")]
        initial_rate: Rational,
        nodes: Vec<DensityEntry>,
    },
    DiscountFactor {
        format_version: u32,
        model_hash: String,
        terminals: Vec<DiscountDocEntry>,
    },
}

fn factor_to_rate(r: &Rational) -> Rational {
    r - Rational::one()
}

fn rate_to_factor(r: &Rational) -> Rational {
    r + Rational::one()
}

/// Values indexed by node from entries that must cover every node exactly once.
fn by_node<'a, T>(
    tree: &EventTree,
    list: &'a str,
    entries: &'a [T],
    node: impl Fn(&T) -> usize,
) -> Result<Vec<&'a T>, DocumentError> {
    let mut slots: Vec<Option<&T>> = vec![None; tree.len()];
    for (i, e) in entries.iter().enumerate() {
        let n = node(e);
        let path = format!("{list}[{i}].node");
        match slots.get_mut(n) {
            None => return Err(DocumentError::at(path, format!("unknown node {n}"))),
            Some(Some(_)) => return Err(DocumentError::at(path, format!("node {n} listed twice"))),
            Some(slot) => *slot = Some(e),
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(n, s)| s.ok_or_else(|| DocumentError::at(list, format!("node {n} is missing"))))
        .collect()
}

fn rates_from_entries<'a>(
    tree: &EventTree,
    list: &str,
    initial: &Rational,
    rates: impl Iterator<Item = &'a Option<Rational>>,
) -> Result<PredictableProcess, DocumentError> {
    let next = rates.map(|r| r.as_ref().map(rate_to_factor)).collect();
    PredictableProcess::new(tree, rate_to_factor(initial), next).map_err(|e| {
        let path = match tree_error_node(&e) {
            Some(n) => format!("{list}[node {}].rate", n.0),
            None => list.to_string(),
        };
        DocumentError::at(path, e.to_string())
    })
}

impl Certificate {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        from_json(text)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn model_hash(&self) -> &str {
        match self {
            Certificate::Arbitrage { model_hash, .. }
            | Certificate::MartingaleTriple { model_hash, .. }
            | Certificate::PricingSystem { model_hash, .. }
            | Certificate::DiscountFactor { model_hash, .. } => model_hash,
        }
    }

    fn format_version(&self) -> u32 {
        match self {
            Certificate::Arbitrage { format_version, .. }
            | Certificate::MartingaleTriple { format_version, .. }
            | Certificate::PricingSystem { format_version, .. }
            | Certificate::DiscountFactor { format_version, .. } => *format_version,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Arbitrage { .. } => "arbitrage",
            Certificate::MartingaleTriple { .. } => "martingale_triple",
            Certificate::PricingSystem { .. } => "pricing_system",
            Certificate::DiscountFactor { .. } => "discount_factor",
        }
    }

    /// Rejects certificates of another format version or issued for a
    /// different model.
    pub fn check_binding(&self, model: &MarketModel) -> Result<(), DocumentError> {
        if self.format_version() != FORMAT_VERSION {
            return Err(DocumentError::at(
                "format_version",
                format!(
                    "unsupported version {}, expected {FORMAT_VERSION}",
                    self.format_version()
                ),
            ));
        }
        let hash = model.content_hash();
        if self.model_hash() != hash {
            return Err(DocumentError::at(
                "model_hash",
                format!(
                    "certificate was issued for model {} but this model is {hash}",
                    self.model_hash()
                ),
            ));
        }
        Ok(())
    }

    pub fn from_strategy(model: &MarketModel, s: &TradingStrategy) -> Self {
        Certificate::Arbitrage {
            format_version: FORMAT_VERSION,
            model_hash: model.content_hash(),
            initial_cash: s.initial_cash.clone(),
            holdings: s
                .holdings
                .iter()
                .enumerate()
                .map(|(node, p)| HoldingEntry {
                    node,
                    cash: p.cash.clone(),
                    shares: p.shares.clone(),
                })
                .collect(),
        }
    }

    pub fn from_triple(model: &MarketModel, tr: &MartingaleTriple) -> Self {
        let tree = model.tree();
        Certificate::MartingaleTriple {
            format_version: FORMAT_VERSION,
            model_hash: model.content_hash(),
            initial_rate: factor_to_rate(tr.rate.initial()),
            measure: tr
                .measure
                .iter()
                .map(|(n, p)| ProbabilityEntry {
                    node: n.0,
                    prob: p.clone(),
                })
                .collect(),
            nodes: tree
                .node_ids()
                .map(|n| PriceEntry {
                    node: n.0,
                    price: tr.price[n].clone(),
                    rate: tr.rate.next(n).map(factor_to_rate),
                })
                .collect(),
        }
    }

    pub fn from_system(model: &MarketModel, ps: &PricingSystem) -> Self {
        Certificate::PricingSystem {
            format_version: FORMAT_VERSION,
            model_hash: model.content_hash(),
            initial_rate: factor_to_rate(ps.rate.initial()),
            nodes: model
                .tree()
                .node_ids()
                .map(|n| DensityEntry {
                    node: n.0,
                    z_r: ps.z_r[n].clone(),
                    z_s: ps.z_s[n].clone(),
                    rate: ps.rate.next(n).map(factor_to_rate),
                })
                .collect(),
        }
    }

    pub fn from_discount_factor(model: &MarketModel, df: &DiscountFactor) -> Self {
        Certificate::DiscountFactor {
            format_version: FORMAT_VERSION,
            model_hash: model.content_hash(),
            terminals: df
                .entries
                .iter()
                .map(|e| DiscountDocEntry {
                    node: e.node.0,
                    cash: e.cash.clone(),
                    stock: e.stock.clone(),
                })
                .collect(),
        }
    }

    pub fn to_strategy(&self, model: &MarketModel) -> Result<TradingStrategy, DocumentError> {
        let Certificate::Arbitrage {
            initial_cash, holdings, ..
        } = self
        else {
            return Err(self.wrong_kind("arbitrage"));
        };
        let entries = by_node(model.tree(), "holdings", holdings, |e| e.node)?;
        Ok(TradingStrategy {
            initial_cash: initial_cash.clone(),
            holdings: entries
                .into_iter()
                .map(|e| Portfolio::new(e.cash.clone(), e.shares.clone()))
                .collect(),
        })
    }

    /// The measure keeps the certificate's order so that the verifier can
    /// flag entries that are not the terminal nodes in order.
    pub fn to_triple(&self, model: &MarketModel) -> Result<MartingaleTriple, DocumentError> {
        let Certificate::MartingaleTriple {
            initial_rate,
            measure,
            nodes,
            ..
        } = self
        else {
            return Err(self.wrong_kind("martingale_triple"));
        };
        let tree = model.tree();
        let entries = by_node(tree, "nodes", nodes, |e| e.node)?;
        for (i, e) in measure.iter().enumerate() {
            if e.node >= tree.len() {
                return Err(DocumentError::at(
                    format!("measure[{i}].node"),
                    format!("unknown node {}", e.node),
                ));
            }
        }
        let price = AdaptedProcess::from_fn(tree, |n| entries[n.0].price.clone());
        let rate = rates_from_entries(tree, "nodes", initial_rate, entries.iter().map(|e| &e.rate))?;
        Ok(MartingaleTriple {
            measure: measure.iter().map(|e| (NodeId(e.node), e.prob.clone())).collect(),
            price,
            rate,
        })
    }

    pub fn to_system(&self, model: &MarketModel) -> Result<PricingSystem, DocumentError> {
        let Certificate::PricingSystem {
            initial_rate, nodes, ..
        } = self
        else {
            return Err(self.wrong_kind("pricing_system"));
        };
        let tree = model.tree();
        let entries = by_node(tree, "nodes", nodes, |e| e.node)?;
        Ok(PricingSystem {
            z_r: AdaptedProcess::from_fn(tree, |n| entries[n.0].z_r.clone()),
            z_s: AdaptedProcess::from_fn(tree, |n| entries[n.0].z_s.clone()),
            rate: rates_from_entries(tree, "nodes", initial_rate, entries.iter().map(|e| &e.rate))?,
        })
    }

    pub fn to_discount_factor(&self, model: &MarketModel) -> Result<DiscountFactor, DocumentError> {
        let Certificate::DiscountFactor { terminals, .. } = self else {
            return Err(self.wrong_kind("discount_factor"));
        };
        for (i, e) in terminals.iter().enumerate() {
            if e.node >= model.tree().len() {
                return Err(DocumentError::at(
                    format!("terminals[{i}].node"),
                    format!("unknown node {}", e.node),
                ));
            }
        }
        Ok(DiscountFactor {
            entries: terminals
                .iter()
                .map(|e| DiscountEntry {
                    node: NodeId(e.node),
                    cash: e.cash.clone(),
                    stock: e.stock.clone(),
                })
                .collect(),
        })
    }

    fn wrong_kind(&self, expected: &str) -> DocumentError {
        DocumentError::at(
            "kind",
            format!("expected a {expected} certificate, found {}", self.kind()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    const BINOMIAL: &str = r#"{
  "format_version": 1,
  "nodes": [
    {
      "id": 0,
      "bid": "90",
      "ask": "100",
      "deposit_rate": "0",
      "credit_rate": "0"
    },
    {
      "id": 1,
      "parent": 0,
      "prob": "0.5",
      "bid": "110",
      "ask": "110"
    },
    {
      "id": 2,
      "parent": 0,
      "prob": "0.5",
      "bid": "95",
      "ask": "95"
    }
  ]
}
"#;

    #[test]
    fn canonical_round_trip_is_byte_exact() {
        let m = parse_model(BINOMIAL).unwrap();
        assert_eq!(m.tree().len(), 3);
        assert_eq!(serialize_model(&m), BINOMIAL);
        assert_eq!(parse_model(&serialize_model(&m)).unwrap(), m);
    }

    #[test]
    fn decimal_and_fraction_literals_stay_exact() {
        let text = BINOMIAL.replace("\"90\"", "\"99.5\"").replace("\"100\"", "\"99.75\"");
        let m = parse_model(&text).unwrap();
        assert_eq!(m.bid(NodeId(0)), &ratio(199, 2));
        let text = BINOMIAL
            .replacen("\"0.5\"", "\"0.3333\"", 1)
            .replacen("\"0.5\"", "\"6667/10000\"", 1);
        let m = parse_model(&text).unwrap();
        assert_eq!(m.tree().cond_prob(NodeId(1)), &ratio(3333, 10000));
        assert_ne!(m.tree().cond_prob(NodeId(1)), &ratio(1, 3));
    }

    #[test]
    fn shuffled_ids_are_renumbered() {
        let text = r#"{"format_version": 1, "nodes": [
            {"id": 7, "parent": 3, "prob": "0.5", "bid": "95", "ask": "95"},
            {"id": 3, "bid": "90", "ask": "100", "deposit_rate": "0", "credit_rate": "0"},
            {"id": 9, "parent": 3, "prob": "0.5", "bid": "110", "ask": "110"}
        ]}"#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.bid(NodeId(0)), &int(90));
        assert_eq!(m.bid(NodeId(1)), &int(95));
        assert_eq!(m.bid(NodeId(2)), &int(110));
    }

    #[test]
    fn errors_carry_locations() {
        let e =
            parse_model(&BINOMIAL.replace("\"95\",\n      \"ask\": \"95\"", "95,\n      \"ask\": \"95\"")).unwrap_err();
        assert_eq!(e.0[0].path, "nodes[2].bid");

        let e = parse_model(&BINOMIAL.replace("\"ask\": \"110\"", "\"ask\": \"105\"")).unwrap_err();
        assert_eq!(e.0[0].path, "nodes[1].ask");

        let e = parse_model(&BINOMIAL.replace(
            "\"parent\": 0,\n      \"prob\": \"0.5\",\n      \"bid\": \"95\"",
            "\"parent\": 4,\n      \"prob\": \"0.5\",\n      \"bid\": \"95\"",
        ))
        .unwrap_err();
        assert_eq!(e.0[0].path, "nodes[2].parent");

        let e = parse_model(&BINOMIAL.replace("\"credit_rate\": \"0\"", "\"credit_rate\": \"-0.5\"")).unwrap_err();
        assert_eq!(e.0[0].path, "nodes[0].credit_rate");

        let e = parse_model(&BINOMIAL.replacen("\"0.5\"", "\"1/3\"", 1)).unwrap_err();
        assert_eq!(e.0[0].path, "nodes[0]");

        let e = parse_model(r#"{"format_version": 1, "nodes": [], "extra": 1}"#).unwrap_err();
        assert!(e.0[0].message.contains("extra"), "{e}");
    }

    #[test]
    fn certificates_round_trip() {
        let m = parse_model(BINOMIAL).unwrap();
        let tree = m.tree();
        let tr = MartingaleTriple {
            measure: vec![(NodeId(1), ratio(1, 3)), (NodeId(2), ratio(2, 3))],
            price: AdaptedProcess::new(tree, vec![int(100), int(110), int(95)]).unwrap(),
            rate: PredictableProcess::constant(tree, int(1), int(1)),
        };
        let cert = Certificate::from_triple(&m, &tr);
        let back = Certificate::parse(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
        back.check_binding(&m).unwrap();
        assert_eq!(back.to_triple(&m).unwrap(), tr);
        assert!(back.to_strategy(&m).is_err());

        let other = parse_model(&BINOMIAL.replace("\"90\"", "\"91\"")).unwrap();
        assert_eq!(back.check_binding(&other).unwrap_err().0[0].path, "model_hash");
    }
}
