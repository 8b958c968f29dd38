//! Exact finite-horizon best response of agent `i` against a weighted set of
//! opponent policy trees, and seeded episode rollouts to score it.
//!
//! The best response is found by backward induction over `i`'s own
//! observation histories. At every history the interactive belief is a
//! distribution over `(state, opponent tree, node within that tree)`; it is
//! updated by exact Bayes filtering, marginalizing over the opponent's
//! observation, which moves each tree to its next node.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::domain::{sample_dense, sample_from, DomainSpec};
use crate::error::{Error, Result};
use crate::policy_tree::{node_count, PolicyTree};
use crate::rng::{from_seed, RandomSource};

/// Largest `(|A_i|·|Ω_i|)^(T−1)` best response will expand.
pub const HISTORY_BUDGET: u128 = 10_000_000;

/// Ties within this margin go to the lower-indexed action.
const TIE_TOLERANCE: f64 = 1e-9;

/// The opponent model node: candidate trees with prior weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelNodePrior {
    trees: Vec<PolicyTree>,
    weights: Vec<f64>,
}

impl ModelNodePrior {
    pub fn new(trees: Vec<PolicyTree>, weights: Vec<f64>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::EmptyInput("model node prior".into()));
        }
        if weights.len() != trees.len() {
            return Err(Error::LengthMismatch {
                expected: trees.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::DegenerateDistribution("prior weights must be finite and non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateDistribution(format!("prior weights sum to {sum}")));
        }
        let (d, b, a) = (trees[0].depth(), trees[0].branching(), trees[0].n_actions());
        for (i, t) in trees.iter().enumerate() {
            if !t.is_complete() {
                return Err(Error::Config(format!("prior tree {i} is incomplete")));
            }
            if (t.depth(), t.branching(), t.n_actions()) != (d, b, a) {
                return Err(Error::Config(format!("prior tree {i} has a different shape")));
            }
        }
        Ok(Self { trees, weights })
    }

    pub fn uniform(trees: Vec<PolicyTree>) -> Result<Self> {
        let n = trees.len().max(1);
        Self::new(trees, vec![1.0 / n as f64; n])
    }

    pub fn trees(&self) -> &[PolicyTree] {
        &self.trees
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_domain(&self, spec: &DomainSpec, horizon: usize) -> Result<()> {
        let t = &self.trees[0];
        if t.branching() != spec.n_observations_j() || t.n_actions() != spec.n_actions_j() {
            return Err(Error::Config(format!(
                "prior trees have {} observations and {} actions, domain `{}` has {} and {}",
                t.branching(),
                t.n_actions(),
                spec.name,
                spec.n_observations_j(),
                spec.n_actions_j()
            )));
        }
        if t.depth() < horizon {
            return Err(Error::Config(format!(
                "prior trees have depth {}, shorter than horizon {horizon}",
                t.depth()
            )));
        }
        Ok(())
    }
}

/// Agent `i`'s conditional plan: a tree over `i`'s own observations whose
/// nodes are `i`'s actions, with its expected value at the root.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponsePolicy {
    pub tree: PolicyTree,
    pub value: f64,
}

/// `(state, tree, node) → probability`, ordered for reproducible sums.
type Belief = BTreeMap<(usize, usize, usize), f64>;

struct Solver<'a> {
    spec: &'a DomainSpec,
    trees: &'a [PolicyTree],
    horizon: usize,
    branching: usize,
    nodes: Vec<Option<usize>>,
}

impl Solver<'_> {
    fn descendants(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut frontier = vec![n];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for k in frontier {
                let first = k * self.branching + 1;
                if first < self.nodes.len() {
                    next.extend(first..first + self.branching);
                }
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }

    fn fill_unreachable(&mut self, n: usize) {
        self.nodes[n] = Some(0);
        for k in self.descendants(n) {
            self.nodes[k] = Some(0);
        }
    }

    /// Unnormalized successor beliefs for each of `i`'s observations.
    fn successors(&self, belief: &Belief, ai: usize) -> Vec<Belief> {
        let spec = self.spec;
        let mut out = vec![Belief::new(); spec.n_observations_i()];
        for (&(s, k, n), &p) in belief {
            let tree = &self.trees[k];
            let aj = tree.action(n).expect("complete tree");
            for &(next, pt) in spec.transition(s, ai, aj) {
                let oi_dist = spec.observation_i(next, ai, aj);
                let oj_dist = spec.observation_j(next, aj);
                for (oi, &po) in oi_dist.iter().enumerate() {
                    if po == 0.0 {
                        continue;
                    }
                    for (oj, &pj) in oj_dist.iter().enumerate() {
                        if pj == 0.0 {
                            continue;
                        }
                        let child = tree.child(n, oj);
                        *out[oi].entry((next, k, child)).or_insert(0.0) += p * pt * po * pj;
                    }
                }
            }
        }
        out
    }

    /// Optimal value from history node `h` at 0-based step `t`; writes the
    /// optimal actions of the sub-plan into `self.nodes`.
    fn solve(&mut self, belief: &Belief, t: usize, h: usize) -> f64 {
        let spec = self.spec;
        let below = self.descendants(h);
        let mut best: Option<(f64, usize, Vec<Option<usize>>)> = None;
        for ai in 0..spec.n_actions_i() {
            let mut value: f64 = belief
                .iter()
                .map(|(&(s, k, n), &p)| p * spec.reward_i(s, ai, self.trees[k].action(n).expect("complete tree")))
                .sum();
            if t + 1 < self.horizon {
                for (oi, succ) in self.successors(belief, ai).into_iter().enumerate() {
                    let child = h * self.branching + 1 + oi;
                    let mass: f64 = succ.values().sum();
                    if mass <= 0.0 {
                        self.fill_unreachable(child);
                        continue;
                    }
                    let normalized: Belief = succ.into_iter().map(|(key, p)| (key, p / mass)).collect();
                    value += mass * self.solve(&normalized, t + 1, child);
                }
            }
            if best.as_ref().is_none_or(|(v, _, _)| value > v + TIE_TOLERANCE) {
                let plan = below.iter().map(|&k| self.nodes[k]).collect();
                best = Some((value, ai, plan));
            }
        }
        let (value, ai, plan) = best.expect("at least one action");
        self.nodes[h] = Some(ai);
        for (&k, a) in below.iter().zip(plan) {
            self.nodes[k] = a;
        }
        value
    }
}

/// Exact best response over horizon `horizon` against `prior`.
pub fn best_response(spec: &DomainSpec, prior: &ModelNodePrior, horizon: usize) -> Result<BestResponsePolicy> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    prior.check_domain(spec, horizon)?;
    let per_step = (spec.n_actions_i() * spec.n_observations_i()) as u128;
    let histories = (0..horizon - 1).try_fold(1u128, |acc, _| acc.checked_mul(per_step)).unwrap_or(u128::MAX);
    if histories > HISTORY_BUDGET {
        return Err(Error::SizeBudget {
            histories,
            budget: HISTORY_BUDGET,
        });
    }
    let mut belief = Belief::new();
    for (s, &ps) in spec.initial_belief().iter().enumerate() {
        for (k, &w) in prior.weights().iter().enumerate() {
            if ps * w > 0.0 {
                *belief.entry((s, k, 0)).or_insert(0.0) += ps * w;
            }
        }
    }
    let branching = spec.n_observations_i();
    let mut solver = Solver {
        spec,
        trees: prior.trees(),
        horizon,
        branching,
        nodes: vec![None; node_count(horizon, branching)],
    };
    let value = solver.solve(&belief, 0, 0);
    let tree = PolicyTree::new(horizon, branching, spec.n_actions_i(), solver.nodes)?;
    Ok(BestResponsePolicy { tree, value })
}

/// One seeded episode of `horizon` simultaneous moves; returns `i`'s summed
/// reward.
pub fn simulate_episode(
    spec: &DomainSpec,
    policy: &BestResponsePolicy,
    j_tree: &PolicyTree,
    horizon: usize,
    rng: &mut RandomSource,
) -> f64 {
    let mut s = sample_dense(spec.initial_belief(), rng);
    let (mut hi, mut hj) = (0, 0);
    let mut total = 0.0;
    for t in 0..horizon {
        let ai = policy.tree.action(hi).expect("complete plan");
        let aj = j_tree.action(hj).expect("complete tree");
        total += spec.reward_i(s, ai, aj);
        s = sample_from(spec.transition(s, ai, aj).iter().copied(), rng);
        let oi = sample_dense(spec.observation_i(s, ai, aj), rng);
        let oj = sample_dense(spec.observation_j(s, aj), rng);
        if t + 1 < horizon {
            hi = policy.tree.child(hi, oi);
            hj = j_tree.child(hj, oj);
        }
    }
    total
}

/// Sample mean and standard error of the episode return over `runs` episodes.
pub fn average_reward(
    spec: &DomainSpec,
    policy: &BestResponsePolicy,
    j_true: &PolicyTree,
    runs: usize,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<(f64, f64)> {
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if !j_true.is_complete() || j_true.depth() < horizon {
        return Err(Error::Config("true opponent tree must be complete and cover the horizon".into()));
    }
    if policy.tree.depth() < horizon || !policy.tree.is_complete() {
        return Err(Error::Config("policy must be complete and cover the horizon".into()));
    }
    if policy.tree.branching() != spec.n_observations_i() || j_true.branching() != spec.n_observations_j() {
        return Err(Error::Config("tree branching does not match the domain's observation counts".into()));
    }
    let returns: Vec<f64> = (0..runs)
        .map(|_| simulate_episode(spec, policy, j_true, horizon, rng))
        .collect();
    Ok(mean_stderr(&returns))
}

/// Mean and standard error (sample standard deviation over `√n`); the error
/// of a single sample is 0.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub value: f64,
    pub mean_reward: f64,
    pub stderr: f64,
    pub solve_seconds: f64,
    pub eval_seconds: f64,
}

/// Solves and scores every method's prior against `j_true`. All methods
/// replay the same episode seed, so identical priors give identical rewards.
pub fn evaluate_pipeline(
    spec: &DomainSpec,
    priors: &[(String, ModelNodePrior)],
    j_true: &PolicyTree,
    horizon: usize,
    runs: usize,
    episode_seed: u64,
) -> Result<Vec<MethodResult>> {
    priors
        .iter()
        .map(|(method, prior)| {
            let start = Instant::now();
            let policy = best_response(spec, prior, horizon)?;
            let solve_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let (mean_reward, stderr) =
                average_reward(spec, &policy, j_true, runs, horizon, &mut from_seed(episode_seed))?;
            Ok(MethodResult {
                method: method.clone(),
                value: policy.value,
                mean_reward,
                stderr,
                solve_seconds,
                eval_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tiger::{self, TigerParams, LISTEN, OPEN_LEFT};
    use crate::domain::{tiger_spec, uav_spec, UavParams};

    fn tiger() -> DomainSpec {
        tiger_spec(&TigerParams::default()).unwrap()
    }

    fn constant_tree(depth: usize, action: usize) -> PolicyTree {
        PolicyTree::from_rule(depth, 2, 3, |_| action)
    }

    #[test]
    fn one_step_tiger_listens() {
        let spec = tiger();
        let prior = ModelNodePrior::uniform(vec![constant_tree(1, LISTEN)]).unwrap();
        let br = best_response(&spec, &prior, 1).unwrap();
        assert_eq!(br.tree.action(0), Some(LISTEN));
        assert!((br.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_trees_collapse() {
        let spec = tiger();
        let t = tiger::default_opponent_tree(3);
        let single = best_response(&spec, &ModelNodePrior::uniform(vec![t.clone()]).unwrap(), 3).unwrap();
        let dup = best_response(&spec, &ModelNodePrior::new(vec![t.clone(), t], vec![0.3, 0.7]).unwrap(), 3).unwrap();
        assert_eq!(single.tree, dup.tree);
        assert!((single.value - dup.value).abs() < 1e-9);
    }

    #[test]
    fn prior_validation() {
        let t = constant_tree(2, LISTEN);
        assert!(ModelNodePrior::new(vec![], vec![]).is_err());
        assert!(ModelNodePrior::new(vec![t.clone()], vec![0.5]).is_err());
        assert!(ModelNodePrior::new(vec![t.clone(), t.clone()], vec![1.0]).is_err());
        let partial = PolicyTree::new(2, 2, 3, vec![Some(0), None, None]).unwrap();
        assert!(ModelNodePrior::uniform(vec![partial]).is_err());
        let spec = tiger();
        let shallow = ModelNodePrior::uniform(vec![t]).unwrap();
        assert!(best_response(&spec, &shallow, 3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let spec = tiger();
        let prior = ModelNodePrior::uniform(vec![constant_tree(8, LISTEN)]).unwrap();
        assert!(matches!(best_response(&spec, &prior, 8), Err(Error::SizeBudget { .. })));
    }

    #[test]
    fn single_episode_matches_table() {
        let spec = tiger();
        let plan = BestResponsePolicy {
            tree: PolicyTree::from_rule(1, 6, 3, |_| OPEN_LEFT),
            value: 0.0,
        };
        let j = constant_tree(1, LISTEN);
        for seed in 0..20 {
            let mut rng = from_seed(seed);
            let s = sample_dense(spec.initial_belief(), &mut from_seed(seed));
            let r = simulate_episode(&spec, &plan, &j, 1, &mut rng);
            assert_eq!(r, spec.reward_i(s, OPEN_LEFT, LISTEN));
        }
    }

    #[test]
    fn average_reward_basics() {
        let spec = tiger();
        let plan = BestResponsePolicy {
            tree: PolicyTree::from_rule(3, 6, 3, |_| LISTEN),
            value: 0.0,
        };
        let j = constant_tree(3, LISTEN);
        let (mean, se) = average_reward(&spec, &plan, &j, 50, 3, &mut from_seed(1)).unwrap();
        assert_eq!((mean, se), (-3.0, 0.0));
        let single = average_reward(&spec, &plan, &j, 1, 3, &mut from_seed(1)).unwrap();
        assert_eq!(single.1, 0.0);
        let a = average_reward(&spec, &plan, &tiger::default_opponent_tree(3), 50, 3, &mut from_seed(4)).unwrap();
        let b = average_reward(&spec, &plan, &tiger::default_opponent_tree(3), 50, 3, &mut from_seed(4)).unwrap();
        assert_eq!(a, b);
        assert!(average_reward(&spec, &plan, &j, 0, 3, &mut from_seed(1)).is_err());
    }

    #[test]
    fn identical_priors_identical_rows() {
        let spec = tiger();
        let prior = ModelNodePrior::uniform(vec![tiger::default_opponent_tree(3), constant_tree(3, LISTEN)]).unwrap();
        let rows = evaluate_pipeline(
            &spec,
            &[("a".into(), prior.clone()), ("b".into(), prior)],
            &tiger::default_opponent_tree(3),
            3,
            40,
            9,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mean_reward, rows[1].mean_reward);
        assert_eq!(rows[0].value, rows[1].value);
    }

    #[test]
    fn uav_best_response_runs() {
        let spec = uav_spec(&UavParams::default()).unwrap();
        let j = crate::domain::uav::default_opponent_tree(3);
        let br = best_response(&spec, &ModelNodePrior::uniform(vec![j]).unwrap(), 3).unwrap();
        assert!(br.tree.is_complete());
        assert!(br.value.is_finite());
    }
}
