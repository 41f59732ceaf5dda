//! Finite filtrations represented as event trees.
//!
//! Nodes are stored in a flat array in time-major order, so the root is
//! always node 0 and a node's parent always has a smaller index. The
//! reference measure is stored as one-step conditional probabilities on the
//! edges; scenario probabilities are products along root-to-leaf paths.

use std::fmt;
use std::ops::Index;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{Display as Q, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree has no nodes")]
    Empty,
    #[error("node 0 must be the root (no parent)")]
    MissingRoot,
    #[error("{0} has no parent but only node 0 may be the root")]
    ExtraRoot(NodeId),
    #[error("{node}: parent {parent} does not precede it")]
    ParentOutOfOrder { node: NodeId, parent: NodeId },
    #[error("{0}: nodes must be listed in time-major order")]
    NotTimeMajor(NodeId),
    #[error("{0}: root conditional probability must be 1")]
    RootProbability(NodeId),
    #[error("{node}: conditional probability {prob} is not strictly positive")]
    NonPositiveProbability { node: NodeId, prob: String },
    #[error("{node}: children's conditional probabilities sum to {sum}, not 1")]
    ProbabilitySum { node: NodeId, sum: String },
    #[error("{node} at time {time} has no children but the horizon is {horizon}")]
    PrematureLeaf { node: NodeId, time: usize, horizon: usize },
    #[error("unknown {0}")]
    UnknownNode(NodeId),
    #[error("{0} is not terminal")]
    NotTerminal(NodeId),
    #[error("{0} is terminal")]
    Terminal(NodeId),
    #[error("process has {got} values but the tree has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{0}: predictable process must be defined exactly on non-terminal nodes")]
    PredictableShape(NodeId),
}

/// Input description of one node: its parent (by index into the same list)
/// and the conditional probability of reaching it from the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub parent: Option<usize>,
    pub prob: Rational,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    time: usize,
    parent: Option<NodeId>,
    prob: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTree {
    nodes: Vec<Node>,
    children: Vec<Vec<NodeId>>,
    horizon: usize,
}

impl EventTree {
    /// Builds a tree from nodes listed in canonical order: node 0 is the
    /// root, every parent precedes its children and times never decrease.
    pub fn new(specs: Vec<NodeSpec>) -> Result<Self, TreeError> {
        if specs.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
        let mut children = vec![Vec::new(); specs.len()];
        for (i, spec) in specs.into_iter().enumerate() {
            let id = NodeId(i);
            let time = match (i, spec.parent) {
                (0, None) => {
                    if !spec.prob.is_one() {
                        return Err(TreeError::RootProbability(id));
                    }
                    0
                }
                (0, Some(_)) => return Err(TreeError::MissingRoot),
                (_, None) => return Err(TreeError::ExtraRoot(id)),
                (_, Some(p)) => {
                    if p >= i {
                        return Err(TreeError::ParentOutOfOrder {
                            node: id,
                            parent: NodeId(p),
                        });
                    }
                    if !spec.prob.is_positive() {
                        return Err(TreeError::NonPositiveProbability {
                            node: id,
                            prob: Q(&spec.prob).to_string(),
                        });
                    }
                    children[p].push(id);
                    nodes[p].time + 1
                }
            };
            if i > 0 && time < nodes[i - 1].time {
                return Err(TreeError::NotTimeMajor(id));
            }
            nodes.push(Node {
                time,
                parent: spec.parent.map(NodeId),
                prob: spec.prob,
            });
        }
        let horizon = nodes.last().map_or(0, |n| n.time);
        for (i, kids) in children.iter().enumerate() {
            let node = &nodes[i];
            if kids.is_empty() {
                if node.time < horizon {
                    return Err(TreeError::PrematureLeaf {
                        node: NodeId(i),
                        time: node.time,
                        horizon,
                    });
                }
                continue;
            }
            let sum: Rational = kids.iter().map(|k| &nodes[k.0].prob).sum();
            if !sum.is_one() {
                return Err(TreeError::ProbabilitySum {
                    node: NodeId(i),
                    sum: Q(&sum).to_string(),
                });
            }
        }
        Ok(Self {
            nodes,
            children,
            horizon,
        })
    }

    /// Recombination-free tree in which every non-terminal node has
    /// `branch_probs.len()` children with the given conditional probabilities.
    pub fn with_branch_probs(horizon: usize, branch_probs: &[Rational]) -> Result<Self, TreeError> {
        let mut specs = vec![NodeSpec {
            parent: None,
            prob: Rational::one(),
        }];
        let mut level = vec![0usize];
        for _ in 0..horizon {
            let mut next = Vec::with_capacity(level.len() * branch_probs.len());
            for &parent in &level {
                for p in branch_probs {
                    next.push(specs.len());
                    specs.push(NodeSpec {
                        parent: Some(parent),
                        prob: p.clone(),
                    });
                }
            }
            level = next;
        }
        Self::new(specs)
    }

    /// Tree with `branching` equally likely children at every non-terminal node.
    pub fn uniform(horizon: usize, branching: usize) -> Self {
        let p = crate::rational::ratio(1, branching.max(1) as i64);
        Self::with_branch_probs(horizon, &vec![p; branching.max(1)]).expect("uniform tree is well formed")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.nodes.len()
    }

    pub fn node_ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn time(&self, node: NodeId) -> usize {
        self.nodes[node.0].time
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node.0].parent
    }

    /// Probability of moving from the parent to `node` (1 for the root).
    pub fn cond_prob(&self, node: NodeId) -> &Rational {
        &self.nodes[node.0].prob
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node.0]
    }

    pub fn is_terminal(&self, node: NodeId) -> bool {
        self.children[node.0].is_empty()
    }

    pub fn successors(&self, node: NodeId) -> Result<&[NodeId], TreeError> {
        self.check(node)?;
        Ok(self.children(node))
    }

    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|&n| self.is_terminal(n))
    }

    pub fn non_terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|&n| !self.is_terminal(n))
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals().count()
    }

    pub fn nodes_at(&self, time: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&n| self.time(n) == time)
    }

    /// Nodes from the root down to `node`, inclusive.
    pub fn path(&self, node: NodeId) -> Vec<NodeId> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Unconditional reference probability of the event represented by `node`.
    pub fn node_prob(&self, node: NodeId) -> Rational {
        self.path(node).iter().map(|&n| self.cond_prob(n)).product()
    }

    pub fn scenario_prob(&self, terminal: NodeId) -> Result<Rational, TreeError> {
        self.check(terminal)?;
        if !self.is_terminal(terminal) {
            return Err(TreeError::NotTerminal(terminal));
        }
        Ok(self.node_prob(terminal))
    }

    /// One-step conditional expectation of `x` at a non-terminal node.
    pub fn conditional_expectation(&self, x: &AdaptedProcess, node: NodeId) -> Result<Rational, TreeError> {
        self.check(node)?;
        if x.len() != self.len() {
            return Err(TreeError::LengthMismatch {
                expected: self.len(),
                got: x.len(),
            });
        }
        if self.is_terminal(node) {
            return Err(TreeError::Terminal(node));
        }
        Ok(self.children(node).iter().map(|&c| self.cond_prob(c) * &x[c]).sum())
    }

    /// Terminal nodes in the subtree rooted at `node`.
    pub fn leaves_below(&self, node: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let kids = self.children(n);
            if kids.is_empty() {
                out.push(n);
            } else {
                stack.extend(kids.iter().rev());
            }
        }
        out
    }

    pub(crate) fn check(&self, node: NodeId) -> Result<(), TreeError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(TreeError::UnknownNode(node))
        }
    }
}

/// A value at every node of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptedProcess(Vec<Rational>);

impl AdaptedProcess {
    pub fn new(tree: &EventTree, values: Vec<Rational>) -> Result<Self, TreeError> {
        if values.len() != tree.len() {
            return Err(TreeError::LengthMismatch {
                expected: tree.len(),
                got: values.len(),
            });
        }
        Ok(Self(values))
    }

    pub fn from_fn(tree: &EventTree, f: impl FnMut(NodeId) -> Rational) -> Self {
        Self(tree.node_ids().map(f).collect())
    }

    pub fn constant(tree: &EventTree, value: Rational) -> Self {
        Self(vec![value; tree.len()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn set(&mut self, node: NodeId, value: Rational) {
        self.0[node.0] = value;
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.0
    }
}

impl Index<NodeId> for AdaptedProcess {
    type Output = Rational;

    fn index(&self, node: NodeId) -> &Rational {
        &self.0[node.0]
    }
}

/// A process whose value for period `(t, t+1]` is known at the time-`t` node.
///
/// `next[ν]` is defined exactly for non-terminal nodes ν; the time-0 value is
/// held separately in `initial`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictableProcess {
    initial: Rational,
    next: Vec<Option<Rational>>,
}

impl PredictableProcess {
    pub fn new(tree: &EventTree, initial: Rational, next: Vec<Option<Rational>>) -> Result<Self, TreeError> {
        if next.len() != tree.len() {
            return Err(TreeError::LengthMismatch {
                expected: tree.len(),
                got: next.len(),
            });
        }
        for node in tree.node_ids() {
            if next[node.0].is_some() == tree.is_terminal(node) {
                return Err(TreeError::PredictableShape(node));
            }
        }
        Ok(Self { initial, next })
    }

    /// Builds the process from a function evaluated on non-terminal nodes.
    pub fn from_fn(tree: &EventTree, initial: Rational, mut f: impl FnMut(NodeId) -> Rational) -> Self {
        let next = tree.node_ids().map(|n| (!tree.is_terminal(n)).then(|| f(n))).collect();
        Self { initial, next }
    }

    pub fn constant(tree: &EventTree, initial: Rational, value: Rational) -> Self {
        Self::from_fn(tree, initial, |_| value.clone())
    }

    pub fn initial(&self) -> &Rational {
        &self.initial
    }

    /// Value for the period following `node`; `None` on terminal nodes.
    pub fn next(&self, node: NodeId) -> Option<&Rational> {
        self.next[node.0].as_ref()
    }

    /// Value for the period ending at `node` (the time-0 value at the root).
    pub fn at(&self, tree: &EventTree, node: NodeId) -> &Rational {
        match tree.parent(node) {
            None => &self.initial,
            Some(p) => self.next[p.0].as_ref().expect("parent of a node is non-terminal"),
        }
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    pub fn set_next(&mut self, node: NodeId, value: Rational) {
        assert!(self.next[node.0].is_some(), "{node} is terminal");
        self.next[node.0] = Some(value);
    }

    pub fn raw_next(&self) -> &[Option<Rational>] {
        &self.next
    }

    pub fn map(&self, mut f: impl FnMut(&Rational) -> Rational) -> Self {
        Self {
            initial: f(&self.initial),
            next: self.next.iter().map(|v| v.as_ref().map(&mut f)).collect(),
        }
    }
}
