//! The four reconstruction operators: split, union, roulette and graphing.

use indexmap::IndexMap;
use rand::Rng;

use super::PolicyTree;
use crate::domain::{DomainSpec, InteractionHistory};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// One length-`T` segment of the history with its probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPath {
    pub steps: Vec<(usize, usize)>,
    pub weight: f64,
}

impl PolicyPath {
    pub fn root_action(&self) -> usize {
        self.steps[0].0
    }

    /// Observations that decide tree placement: `o¹ … o^(T-1)`.
    pub fn placement_observations(&self) -> Vec<usize> {
        let n = self.steps.len().saturating_sub(1);
        self.steps[..n].iter().map(|&(_, o)| o).collect()
    }
}

/// Distinct segments of a history, in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub depth: usize,
    pub history_len: usize,
    pub entries: Vec<PolicyPath>,
}

impl PathSet {
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|p| p.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObsGroup {
    pub mass: f64,
    pub paths: Vec<PolicyPath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionGroup {
    pub mass: f64,
    pub by_obs: IndexMap<Vec<usize>, ObsGroup>,
}

/// Paths grouped by root action, then by placement observations.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedPaths {
    pub depth: usize,
    pub branching: usize,
    pub n_actions: usize,
    pub by_action: IndexMap<usize, ActionGroup>,
}

impl GroupedPaths {
    pub fn total_mass(&self) -> f64 {
        self.by_action.values().map(|g| g.mass).sum()
    }
}

/// Cuts the history into `⌊L/T⌋` consecutive blocks starting at the first
/// step, drops the remainder, and merges duplicates with weight `count·T/L`.
pub fn split(history: &InteractionHistory, depth: usize) -> Result<PathSet> {
    if depth == 0 {
        return Err(Error::Config("tree depth must be at least 1".into()));
    }
    let len = history.len();
    if len < depth {
        return Err(Error::EmptyInput(format!(
            "history of length {len} is shorter than the tree depth {depth}"
        )));
    }
    let mut counts: IndexMap<&[(usize, usize)], usize> = IndexMap::new();
    for block in history.steps.chunks_exact(depth) {
        *counts.entry(block).or_insert(0) += 1;
    }
    let entries = counts
        .into_iter()
        .map(|(steps, count)| PolicyPath {
            steps: steps.to_vec(),
            weight: (count * depth) as f64 / len as f64,
        })
        .collect();
    Ok(PathSet {
        depth,
        history_len: len,
        entries,
    })
}

/// Groups paths by root action and observation sequence; group masses are
/// member sums. Only non-empty groups appear, in first-appearance order.
pub fn union(paths: &PathSet, spec: &DomainSpec) -> Result<GroupedPaths> {
    let n_actions = spec.n_actions_j();
    let branching = spec.n_observations_j();
    let mut by_action: IndexMap<usize, ActionGroup> = IndexMap::new();
    for path in &paths.entries {
        if path.steps.len() != paths.depth {
            return Err(Error::LengthMismatch {
                expected: paths.depth,
                actual: path.steps.len(),
            });
        }
        if path.steps.iter().any(|&(a, o)| a >= n_actions || o >= branching) {
            return Err(Error::Config("path uses symbols outside the domain".into()));
        }
        let group = by_action.entry(path.root_action()).or_insert_with(|| ActionGroup {
            mass: 0.0,
            by_obs: IndexMap::new(),
        });
        group.mass += path.weight;
        let obs = group
            .by_obs
            .entry(path.placement_observations())
            .or_insert_with(|| ObsGroup {
                mass: 0.0,
                paths: Vec::new(),
            });
        obs.mass += path.weight;
        obs.paths.push(path.clone());
    }
    Ok(GroupedPaths {
        depth: paths.depth,
        branching,
        n_actions,
        by_action,
    })
}

/// Roulette wheel with an explicit draw `p_r ∈ [0, Σw]`: walks the weights in
/// order and returns the first index whose running sum reaches `p_r`.
/// Zero-weight entries are never returned.
pub fn roulette_pick(weights: &[f64], p_r: f64) -> Result<usize> {
    check_weights(weights)?;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if p_r <= acc {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Draws an index with probability proportional to its weight.
pub fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total = check_weights(weights)?;
    roulette_pick(weights, rng.random::<f64>() * total)
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::DegenerateDistribution("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateDistribution("all weights are zero".into()));
    }
    Ok(total)
}

fn place(tree: &mut PolicyTree, path: &PolicyPath, commit: bool) -> Result<()> {
    let mut node = 0;
    let depth = path.steps.len();
    for (t, &(a, o)) in path.steps.iter().enumerate() {
        match tree.action(node) {
            Some(existing) if existing != a => {
                return Err(Error::InconsistentPaths {
                    node,
                    first: existing,
                    second: a,
                })
            }
            _ if commit => tree.set(node, Some(a)),
            _ => {}
        }
        if t + 1 < depth {
            node = tree.child(node, o);
        }
    }
    Ok(())
}

/// Merges paths sharing a root action into one tree. Each path's actions go
/// to the nodes its observation prefix leads to; identical placements
/// deduplicate, and two different actions at one node are an error.
pub fn graphing(paths: &[PolicyPath], branching: usize, n_actions: usize) -> Result<PolicyTree> {
    let first = paths
        .first()
        .ok_or_else(|| Error::EmptyInput("graphing needs at least one path".into()))?;
    let depth = first.steps.len();
    let mut tree = PolicyTree::empty(depth, branching, n_actions);
    for path in paths {
        if path.steps.len() != depth {
            return Err(Error::LengthMismatch {
                expected: depth,
                actual: path.steps.len(),
            });
        }
        if path.steps.iter().any(|&(a, o)| a >= n_actions || o >= branching) {
            return Err(Error::Config("path uses symbols outside the tree alphabet".into()));
        }
        place(&mut tree, path, true)?;
    }
    Ok(tree)
}

/// Samples one (possibly incomplete) tree: a root action by roulette over the
/// action-group masses, then one path per observation group by roulette over
/// path weights, merged by [`graphing`].
///
/// When the history is noisy two observation groups can disagree on a shared
/// prefix node. Each group's roulette then only ranges over paths consistent
/// with the groups already drawn; a group with no consistent path is skipped
/// and its unmatched nodes stay EMPTY.
pub fn sample_incomplete_tree(groups: &GroupedPaths, rng: &mut RandomSource) -> Result<PolicyTree> {
    if groups.by_action.is_empty() {
        return Err(Error::EmptyInput("no grouped paths".into()));
    }
    let masses: Vec<f64> = groups.by_action.values().map(|g| g.mass).collect();
    let (_, group) = groups
        .by_action
        .get_index(roulette(&masses, rng)?)
        .expect("roulette index in range");

    let mut partial = PolicyTree::empty(groups.depth, groups.branching, groups.n_actions);
    let mut chosen = Vec::with_capacity(group.by_obs.len());
    for obs_group in group.by_obs.values() {
        let consistent: Vec<&PolicyPath> = obs_group
            .paths
            .iter()
            .filter(|p| place(&mut partial, p, false).is_ok())
            .collect();
        if consistent.is_empty() {
            continue;
        }
        let weights: Vec<f64> = consistent.iter().map(|p| p.weight).collect();
        let path = consistent[roulette(&weights, rng)?];
        place(&mut partial, path, true)?;
        chosen.push(path.clone());
    }
    graphing(&chosen, groups.branching, groups.n_actions)
}

/// split → union → `m` × (roulette sampling + graphing).
pub fn reconstruct_trees(
    history: &InteractionHistory,
    depth: usize,
    m: usize,
    spec: &DomainSpec,
    rng: &mut RandomSource,
) -> Result<Vec<PolicyTree>> {
    if m == 0 {
        return Err(Error::Config("number of reconstructed trees must be at least 1".into()));
    }
    let paths = split(history, depth)?;
    let groups = union(&paths, spec)?;
    (0..m).map(|_| sample_incomplete_tree(&groups, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{tiger_spec, TigerParams};
    use crate::rng::from_seed;

    fn path(steps: &[(usize, usize)], weight: f64) -> PolicyPath {
        PolicyPath {
            steps: steps.to_vec(),
            weight,
        }
    }

    #[test]
    fn split_two_distinct_segments() {
        let h = InteractionHistory::new(vec![(1, 1), (1, 2), (2, 1), (1, 1)]);
        let ps = split(&h, 2).unwrap();
        assert_eq!(
            ps.entries,
            vec![path(&[(1, 1), (1, 2)], 0.5), path(&[(2, 1), (1, 1)], 0.5)]
        );
    }

    #[test]
    fn split_merges_duplicates() {
        let h = InteractionHistory::new([(0, 1), (2, 0)].repeat(3));
        let ps = split(&h, 2).unwrap();
        assert_eq!(ps.entries.len(), 1);
        assert_eq!(ps.entries[0].weight, 1.0);
    }

    #[test]
    fn split_discards_trailing_steps() {
        let h = InteractionHistory::new((0..7).map(|k| (k % 3, k % 2)).collect());
        let ps = split(&h, 3).unwrap();
        assert_eq!(ps.entries.len(), 2);
        assert!((ps.total_mass() - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn split_rejects_short_history() {
        let h = InteractionHistory::new(vec![(0, 0)]);
        assert!(matches!(split(&h, 2), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn union_singleton_and_additivity() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let ps = PathSet {
            depth: 2,
            history_len: 10,
            entries: vec![path(&[(1, 0), (2, 1)], 0.3), path(&[(1, 0), (0, 0)], 0.2)],
        };
        let g = union(&ps, &spec).unwrap();
        assert_eq!(g.by_action.len(), 1);
        let group = &g.by_action[&1];
        assert!((group.mass - 0.5).abs() < 1e-12);
        assert!((group.by_obs[&vec![0]].mass - 0.5).abs() < 1e-12);

        let one = PathSet {
            depth: 2,
            history_len: 10,
            entries: vec![path(&[(2, 1), (2, 1)], 0.2)],
        };
        let g = union(&one, &spec).unwrap();
        assert_eq!(g.by_action.keys().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(g.by_action[&2].mass, 0.2);
    }

    #[test]
    fn roulette_boundaries() {
        let w = [0.3, 0.7];
        assert_eq!(roulette_pick(&w, 0.2).unwrap(), 0);
        assert_eq!(roulette_pick(&w, 0.3).unwrap(), 0);
        assert_eq!(roulette_pick(&w, 0.31).unwrap(), 1);
        assert_eq!(roulette_pick(&[0.0, 1.0], 0.0).unwrap(), 1);
    }

    #[test]
    fn roulette_rejects_degenerate_weights() {
        assert!(matches!(roulette_pick(&[0.0, 0.0], 0.1), Err(Error::DegenerateDistribution(_))));
        assert!(matches!(roulette_pick(&[], 0.1), Err(Error::DegenerateDistribution(_))));
    }

    #[test]
    fn graphing_places_and_detects_conflicts() {
        let t = graphing(&[path(&[(1, 0), (2, 0)], 1.0)], 2, 4).unwrap();
        assert_eq!(t.nodes(), &[Some(1), Some(2), None]);
        let t = graphing(&[path(&[(1, 0), (2, 0)], 0.5), path(&[(1, 1), (3, 0)], 0.5)], 2, 4).unwrap();
        assert_eq!(t.nodes(), &[Some(1), Some(2), Some(3)]);
        assert!(t.is_complete());
        let err = graphing(&[path(&[(1, 0), (2, 0)], 0.5), path(&[(1, 0), (3, 0)], 0.5)], 2, 4);
        assert!(matches!(err, Err(Error::InconsistentPaths { node: 1, .. })));
    }

    #[test]
    fn single_path_gives_the_only_tree() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let h = InteractionHistory::new(vec![(0, 1), (2, 0), (1, 1)]);
        let trees = reconstruct_trees(&h, 3, 1, &spec, &mut from_seed(0)).unwrap();
        assert_eq!(
            trees[0].nodes(),
            &[Some(0), None, Some(2), None, None, Some(1), None]
        );
    }

    #[test]
    fn full_coverage_gives_complete_tree() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let h = InteractionHistory::new(vec![(0, 0), (1, 0), (0, 1), (2, 1)]);
        let trees = reconstruct_trees(&h, 2, 3, &spec, &mut from_seed(5)).unwrap();
        for t in trees {
            assert_eq!(t.nodes(), &[Some(0), Some(1), Some(2)]);
        }
    }

    #[test]
    fn conflicting_groups_stay_consistent() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        // o-groups (0,0) and (0,1) disagree on the action at node 1
        let ps = PathSet {
            depth: 3,
            history_len: 6,
            entries: vec![path(&[(0, 0), (1, 0), (2, 0)], 0.5), path(&[(0, 0), (2, 1), (0, 0)], 0.5)],
        };
        let g = union(&ps, &spec).unwrap();
        for seed in 0..50 {
            let t = sample_incomplete_tree(&g, &mut from_seed(seed)).unwrap();
            assert!(t.is_well_formed());
            assert_eq!(t.nodes().iter().flatten().count(), 3);
        }
    }
}
