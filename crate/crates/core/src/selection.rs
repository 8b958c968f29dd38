//! Set-level scores over candidate trees and top-K subset selection.
//!
//! MDF counts, for every depth `t`, the distinct root prefixes of length `t`
//! and the distinct sub-trees ("frames") rooted at depth `t`, discounted by
//! `|Ω|^(t−1)`. ICD is the height-weighted entropy-like sum
//! `−Σ ln(1+h(n))·p_n·ln p_n` over the per-node confidences of generated
//! trees.

use std::collections::HashSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy_tree::{level_start, PolicyTree};

/// Largest number of subsets exhaustive selection will enumerate.
pub const EXHAUSTIVE_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Mdf,
    Icd,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mdf" => Ok(MetricKind::Mdf),
            "icd" => Ok(MetricKind::Icd),
            other => Err(Error::Config(format!("unknown metric `{other}` (expected mdf or icd)"))),
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricKind::Mdf => "mdf",
            MetricKind::Icd => "icd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Exhaustive,
    #[default]
    Greedy,
}

/// Where a candidate came from: the generation seed and the index of the
/// source vector fed to the network (if known).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub seed: u64,
    pub source_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    trees: Vec<PolicyTree>,
    pub provenance: Provenance,
}

impl CandidateSet {
    /// All trees must be complete and share depth, branching and action count.
    pub fn new(trees: Vec<PolicyTree>, provenance: Provenance) -> Result<Self> {
        let first = trees.first().ok_or_else(|| Error::EmptyInput("candidate set".into()))?;
        let shape = (first.depth(), first.branching(), first.n_actions());
        for (i, t) in trees.iter().enumerate() {
            if (t.depth(), t.branching(), t.n_actions()) != shape {
                return Err(Error::Config(format!("candidate {i} has a different tree shape")));
            }
            if !t.is_complete() {
                return Err(Error::Config(format!("candidate {i} is incomplete")));
            }
        }
        Ok(Self { trees, provenance })
    }

    pub fn trees(&self) -> &[PolicyTree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

/// Distinct-item accumulator behind MDF, kept incremental for greedy search.
#[derive(Debug, Clone, Default)]
struct MdfState {
    prefixes: Vec<HashSet<Vec<Option<usize>>>>,
    frames: Vec<HashSet<Vec<Option<usize>>>>,
}

impl MdfState {
    fn new(depth: usize) -> Self {
        Self {
            prefixes: vec![HashSet::new(); depth],
            frames: vec![HashSet::new(); depth],
        }
    }

    fn add(&mut self, tree: &PolicyTree) {
        for t in 0..tree.depth() {
            for n in level_start(t + 1, tree.branching())..level_start(t + 2, tree.branching()) {
                self.prefixes[t].insert(tree.action_prefix(n));
                self.frames[t].insert(tree.subtree(n));
            }
        }
    }

    fn score(&self, branching: usize) -> f64 {
        let mut scale = 1.0;
        let mut total = 0.0;
        for (p, f) in self.prefixes.iter().zip(&self.frames) {
            total += (p.len() + f.len()) as f64 / scale;
            scale *= branching as f64;
        }
        total
    }
}

pub fn mdf(set: &[&PolicyTree]) -> Result<f64> {
    let first = set.first().ok_or_else(|| Error::EmptyInput("MDF set".into()))?;
    let mut state = MdfState::new(first.depth());
    for t in set {
        state.add(t);
    }
    Ok(state.score(first.branching()))
}

/// ICD contribution of a single tree.
pub fn tree_icd(tree: &PolicyTree) -> Result<f64> {
    let probs = tree
        .node_probs()
        .ok_or_else(|| Error::Metric("ICD needs node probabilities; tree has none".into()))?;
    let mut total = 0.0;
    for (n, &p) in probs.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Metric(format!("node probability {p} outside (0, 1]")));
        }
        let h = tree.depth() + 1 - tree.level(n);
        total -= (1.0 + h as f64).ln() * p * p.ln();
    }
    Ok(total)
}

pub fn icd(set: &[&PolicyTree]) -> Result<f64> {
    set.iter().map(|t| tree_icd(t)).sum()
}

pub fn score(set: &[&PolicyTree], metric: MetricKind) -> Result<f64> {
    match metric {
        MetricKind::Mdf => mdf(set),
        MetricKind::Icd => icd(set),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Picks `k` candidates maximizing `metric`; the result holds candidate
/// indices in increasing order.
///
/// Exhaustive mode returns the first maximizing subset in lexicographic
/// order. Greedy mode adds, one at a time, the candidate with the largest
/// marginal gain, preferring the lowest index on ties.
pub fn top_k(candidates: &CandidateSet, k: usize, metric: MetricKind, mode: SelectionMode) -> Result<Vec<usize>> {
    let n = candidates.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let trees = candidates.trees();
    if metric == MetricKind::Icd {
        for t in trees {
            tree_icd(t)?;
        }
    }
    match mode {
        SelectionMode::Exhaustive => {
            let subsets = binomial(n, k);
            if subsets > EXHAUSTIVE_BUDGET {
                return Err(Error::ExhaustiveBudget {
                    subsets,
                    budget: EXHAUSTIVE_BUDGET,
                });
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            for combo in (0..n).combinations(k) {
                let set: Vec<&PolicyTree> = combo.iter().map(|&i| &trees[i]).collect();
                let s = score(&set, metric)?;
                if best.as_ref().is_none_or(|(b, _)| s > *b) {
                    best = Some((s, combo));
                }
            }
            Ok(best.expect("at least one subset").1)
        }
        SelectionMode::Greedy => match metric {
            MetricKind::Icd => {
                let own: Vec<f64> = trees.iter().map(tree_icd).collect::<Result<_>>()?;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| own[b].total_cmp(&own[a]).then(a.cmp(&b)));
                let mut picked = order[..k].to_vec();
                picked.sort_unstable();
                Ok(picked)
            }
            MetricKind::Mdf => {
                let branching = trees[0].branching();
                let mut state = MdfState::new(trees[0].depth());
                let mut picked = Vec::with_capacity(k);
                let mut used = vec![false; n];
                for _ in 0..k {
                    let mut best: Option<(f64, usize, MdfState)> = None;
                    for i in (0..n).filter(|&i| !used[i]) {
                        let mut next = state.clone();
                        next.add(&trees[i]);
                        let s = next.score(branching);
                        if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
                            best = Some((s, i, next));
                        }
                    }
                    let (_, i, next) = best.expect("k ≤ n leaves a candidate");
                    used[i] = true;
                    picked.push(i);
                    state = next;
                }
                picked.sort_unstable();
                Ok(picked)
            }
        },
    }
}
