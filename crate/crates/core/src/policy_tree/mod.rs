//! Policy trees and their reconstruction from an interaction history.
//!
//! A policy tree of depth `T` is a full `|Ω|`-ary tree whose nodes are
//! actions and whose edges are observations. Nodes are stored in a flat
//! level-order array: the root is index 0 and the child of node `n` under
//! observation `o` is `n·|Ω| + 1 + o`. Within a level, node order is the
//! base-`|Ω|` number formed by the observation prefix, first observation most
//! significant.
//!
//! A node may be EMPTY (`None`) when the history never showed what the agent
//! does there; such a tree is incomplete.

mod ops;
mod text;

pub use ops::{
    graphing, reconstruct_trees, roulette, roulette_pick, sample_incomplete_tree, split, union,
    ActionGroup, GroupedPaths, ObsGroup, PathSet, PolicyPath,
};
pub use text::{read_trees, write_edge_list, write_trees};

use crate::error::{Error, Result};

/// Number of nodes in a full `branching`-ary tree with `depth` levels.
pub fn node_count(depth: usize, branching: usize) -> usize {
    level_start(depth + 1, branching)
}

/// Level-order index of the first node at 1-based `level`.
pub fn level_start(level: usize, branching: usize) -> usize {
    let mut start = 0;
    let mut width = 1;
    for _ in 1..level {
        start += width;
        width *= branching;
    }
    start
}

/// 1-based depth of the node at level-order index `n`.
pub fn node_level(n: usize, branching: usize) -> usize {
    let mut level = 1;
    let mut end = 1;
    let mut width = 1;
    while n >= end {
        width *= branching;
        end += width;
        level += 1;
    }
    level
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTree {
    depth: usize,
    branching: usize,
    n_actions: usize,
    nodes: Vec<Option<usize>>,
    node_probs: Option<Vec<f64>>,
}

impl PolicyTree {
    pub fn new(depth: usize, branching: usize, n_actions: usize, nodes: Vec<Option<usize>>) -> Result<Self> {
        if depth == 0 || branching == 0 || n_actions == 0 {
            return Err(Error::Config("tree depth, branching and action count must be positive".into()));
        }
        let expected = node_count(depth, branching);
        if nodes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: nodes.len(),
            });
        }
        if let Some(a) = nodes.iter().flatten().find(|&&a| a >= n_actions) {
            return Err(Error::Config(format!("action {a} out of range for {n_actions} actions")));
        }
        Ok(Self {
            depth,
            branching,
            n_actions,
            nodes,
            node_probs: None,
        })
    }

    /// A tree with every node EMPTY.
    pub fn empty(depth: usize, branching: usize, n_actions: usize) -> Self {
        Self {
            depth,
            branching,
            n_actions,
            nodes: vec![None; node_count(depth, branching)],
            node_probs: None,
        }
    }

    /// Builds a complete tree from a rule mapping the observation prefix
    /// leading to a node onto the node's action.
    pub fn from_rule(depth: usize, branching: usize, n_actions: usize, rule: impl Fn(&[usize]) -> usize) -> Self {
        let mut tree = Self::empty(depth, branching, n_actions);
        for n in 0..tree.nodes.len() {
            let a = rule(&tree.observation_prefix(n));
            assert!(a < n_actions, "rule produced action {a}");
            tree.nodes[n] = Some(a);
        }
        tree
    }

    pub fn with_node_probs(mut self, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                actual: probs.len(),
            });
        }
        self.node_probs = Some(probs);
        Ok(self)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn branching(&self) -> usize {
        self.branching
    }
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
    pub fn nodes(&self) -> &[Option<usize>] {
        &self.nodes
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.iter().all(Option::is_none)
    }
    pub fn node_probs(&self) -> Option<&[f64]> {
        self.node_probs.as_deref()
    }

    pub fn action(&self, n: usize) -> Option<usize> {
        self.nodes[n]
    }

    pub(crate) fn set(&mut self, n: usize, action: Option<usize>) {
        self.nodes[n] = action;
    }

    pub fn child(&self, n: usize, obs: usize) -> usize {
        n * self.branching + 1 + obs
    }

    pub fn level(&self, n: usize) -> usize {
        node_level(n, self.branching)
    }

    /// Observations on the edges from the root down to node `n`.
    pub fn observation_prefix(&self, mut n: usize) -> Vec<usize> {
        let mut obs = Vec::new();
        while n > 0 {
            obs.push((n - 1) % self.branching);
            n = (n - 1) / self.branching;
        }
        obs.reverse();
        obs
    }

    pub fn is_complete(&self) -> bool {
        self.nodes.iter().all(Option::is_some)
    }

    /// An EMPTY node never has a non-EMPTY descendant.
    pub fn is_well_formed(&self) -> bool {
        (1..self.nodes.len()).all(|n| self.nodes[n].is_none() || self.nodes[(n - 1) / self.branching].is_some())
    }

    /// Same shape and same actions, ignoring node probabilities.
    pub fn same_policy(&self, other: &PolicyTree) -> bool {
        self.depth == other.depth && self.branching == other.branching && self.nodes == other.nodes
    }

    /// Root-to-leaf decomposition: one path per leaf, each weighted
    /// `1/|Ω|^(T-1)`. The trailing observation of every path is 0; it does
    /// not affect placement.
    pub fn paths(&self) -> Vec<PolicyPath> {
        let leaves = level_start(self.depth, self.branching)..self.nodes.len();
        let weight = 1.0 / leaves.len() as f64;
        leaves
            .map(|leaf| {
                let obs = self.observation_prefix(leaf);
                let mut node = 0;
                let mut steps = Vec::with_capacity(self.depth);
                for t in 0..self.depth {
                    let o = obs.get(t).copied().unwrap_or(0);
                    steps.push((self.nodes[node].unwrap_or(usize::MAX), o));
                    if t + 1 < self.depth {
                        node = self.child(node, o);
                    }
                }
                PolicyPath { steps, weight }
            })
            .collect()
    }

    /// Replaces every EMPTY node with `action`; returns the tree and how many
    /// nodes were filled.
    pub fn fill_empty(&self, action: usize) -> (PolicyTree, usize) {
        let mut out = self.clone();
        let mut filled = 0;
        for n in out.nodes.iter_mut().filter(|n| n.is_none()) {
            *n = Some(action);
            filled += 1;
        }
        (out, filled)
    }

    /// Prefix of `(action, observation)` pairs leading to node `n`, ending
    /// with `n`'s own action.
    pub fn action_prefix(&self, n: usize) -> Vec<Option<usize>> {
        let obs = self.observation_prefix(n);
        let mut node = 0;
        let mut out = Vec::with_capacity(2 * obs.len() + 1);
        for &o in &obs {
            out.push(self.nodes[node]);
            out.push(Some(o));
            node = self.child(node, o);
        }
        out.push(self.nodes[node]);
        out
    }

    /// Level-order actions of the sub-tree rooted at `n`.
    pub fn subtree(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = Vec::new();
        let mut frontier = vec![n];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &k in &frontier {
                out.push(self.nodes[k]);
                let first = k * self.branching + 1;
                if first < self.nodes.len() {
                    next.extend(first..first + self.branching);
                }
            }
            frontier = next;
        }
        out
    }
}
