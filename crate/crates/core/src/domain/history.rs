use rand::Rng;

use super::{sample_dense, sample_from, DomainSpec};
use crate::error::{Error, Result};
use crate::policy_tree::PolicyTree;
use crate::rng::RandomSource;

/// The opponent's recorded action-observation sequence `(a¹o¹, a²o², …)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionHistory {
    pub steps: Vec<(usize, usize)>,
}

impl InteractionHistory {
    pub fn new(steps: Vec<(usize, usize)>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Most frequent action, lowest index on ties; `None` for an empty history.
    pub fn most_frequent_action(&self, n_actions: usize) -> Option<usize> {
        let mut counts = vec![0usize; n_actions];
        for &(a, _) in &self.steps {
            counts[a] += 1;
        }
        let best = counts.iter().copied().max()?;
        if best == 0 {
            return None;
        }
        counts.iter().position(|&c| c == best)
    }
}

/// How the opponent picks actions while its history is recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruthPolicy {
    /// Walk a complete policy tree, restarting at the root every `depth`
    /// steps. With probability `action_noise` the tree's action is replaced
    /// by a uniformly random one (the walk still follows the observation).
    Tree { tree: PolicyTree, action_noise: f64 },
    /// Stochastic reactive policy: a distribution for the first step and one
    /// per most recent observation afterwards.
    Reactive {
        initial: Vec<f64>,
        after_observation: Vec<Vec<f64>>,
    },
}

impl GroundTruthPolicy {
    pub fn tree(tree: PolicyTree) -> Self {
        GroundTruthPolicy::Tree {
            tree,
            action_noise: 0.0,
        }
    }

    pub fn uniform(n_actions: usize, n_observations: usize) -> Self {
        let u = vec![1.0 / n_actions as f64; n_actions];
        GroundTruthPolicy::Reactive {
            initial: u.clone(),
            after_observation: vec![u; n_observations],
        }
    }

    fn validate(&self, spec: &DomainSpec) -> Result<()> {
        let naj = spec.n_actions_j();
        match self {
            GroundTruthPolicy::Tree { tree, action_noise } => {
                if !tree.is_complete() {
                    return Err(Error::Config("ground-truth tree must be complete".into()));
                }
                if tree.branching() != spec.n_observations_j() || tree.n_actions() != naj {
                    return Err(Error::Config("ground-truth tree does not match the domain".into()));
                }
                super::check_probability("action_noise", *action_noise)
            }
            GroundTruthPolicy::Reactive {
                initial,
                after_observation,
            } => {
                let ok = |p: &Vec<f64>| {
                    p.len() == naj
                        && p.iter().all(|&x| x >= 0.0)
                        && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
                };
                if !ok(initial)
                    || after_observation.len() != spec.n_observations_j()
                    || !after_observation.iter().all(ok)
                {
                    return Err(Error::Config("reactive policy tables are malformed".into()));
                }
                Ok(())
            }
        }
    }
}

/// Rolls out the opponent for `len` steps while `i` plays its passive action.
///
/// The initial state is drawn from the domain's initial belief and then
/// evolves continuously; only the opponent's policy restarts.
pub fn simulate_history(
    spec: &DomainSpec,
    policy: &GroundTruthPolicy,
    len: usize,
    rng: &mut RandomSource,
) -> Result<InteractionHistory> {
    if len == 0 {
        return Err(Error::EmptyInput("history length must be at least 1".into()));
    }
    policy.validate(spec)?;
    let ai = spec.passive_action_i;
    let mut state = sample_dense(spec.initial_belief(), rng);
    let mut node = 0usize;
    let mut depth = 1usize;
    let mut last_obs: Option<usize> = None;
    let mut steps = Vec::with_capacity(len);
    for _ in 0..len {
        let aj = match policy {
            GroundTruthPolicy::Tree { tree, action_noise } => {
                let planned = tree.action(node).expect("complete tree");
                if *action_noise > 0.0 && rng.random::<f64>() < *action_noise {
                    rng.random_range(0..spec.n_actions_j())
                } else {
                    planned
                }
            }
            GroundTruthPolicy::Reactive {
                initial,
                after_observation,
            } => match last_obs {
                None => sample_dense(initial, rng),
                Some(o) => sample_dense(&after_observation[o], rng),
            },
        };
        state = sample_from(spec.transition(state, ai, aj).iter().copied(), rng);
        let obs = sample_dense(spec.observation_j(state, aj), rng);
        steps.push((aj, obs));
        last_obs = Some(obs);
        if let GroundTruthPolicy::Tree { tree, .. } = policy {
            if depth == tree.depth() {
                node = 0;
                depth = 1;
            } else {
                node = tree.child(node, obs);
                depth += 1;
            }
        }
    }
    Ok(InteractionHistory { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tiger::{self, tiger_spec, TigerParams};
    use crate::rng::from_seed;

    #[test]
    fn exact_length_and_constant_policy() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let listen = GroundTruthPolicy::tree(PolicyTree::from_rule(2, 2, 3, |_| tiger::LISTEN));
        let h = simulate_history(&spec, &listen, 1, &mut from_seed(1)).unwrap();
        assert_eq!(h.len(), 1);
        let h = simulate_history(&spec, &listen, 500, &mut from_seed(1)).unwrap();
        assert_eq!(h.len(), 500);
        assert!(h.steps.iter().all(|&(a, _)| a == tiger::LISTEN));
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let p = GroundTruthPolicy::uniform(3, 2);
        let a = simulate_history(&spec, &p, 300, &mut from_seed(9)).unwrap();
        let b = simulate_history(&spec, &p, 300, &mut from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_length_is_rejected() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let p = GroundTruthPolicy::uniform(3, 2);
        assert!(simulate_history(&spec, &p, 0, &mut from_seed(0)).is_err());
    }

    #[test]
    fn tree_walk_restarts_every_depth_steps() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let tree = tiger::default_opponent_tree(3);
        let p = GroundTruthPolicy::tree(tree.clone());
        let h = simulate_history(&spec, &p, 300, &mut from_seed(4)).unwrap();
        for seg in h.steps.chunks(3) {
            let mut node = 0;
            for (t, &(a, o)) in seg.iter().enumerate() {
                assert_eq!(Some(a), tree.action(node));
                if t + 1 < 3 {
                    node = tree.child(node, o);
                }
            }
        }
    }

    #[test]
    fn most_frequent_action_prefers_lowest_index_on_ties() {
        let h = InteractionHistory::new(vec![(2, 0), (1, 0), (2, 1), (1, 1)]);
        assert_eq!(h.most_frequent_action(3), Some(1));
        assert_eq!(InteractionHistory::default().most_frequent_action(3), None);
    }
}
