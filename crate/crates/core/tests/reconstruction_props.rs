mod common;

use proptest::prelude::*;
use veb_core::domain::{tiger_spec, InteractionHistory, TigerParams};
use veb_core::policy_tree::{graphing, reconstruct_trees, roulette, split, union};
use veb_core::rng::from_seed;

fn history(len: usize, seed: u64) -> InteractionHistory {
    use rand::Rng;
    let mut rng = from_seed(seed);
    InteractionHistory::new((0..len).map(|_| (rng.random_range(0..3), rng.random_range(0..2))).collect())
}

proptest! {
    #[test]
    fn split_and_union_conserve_mass(depth in 2usize..=4, extra in 0usize..3000, seed in any::<u64>()) {
        let len = depth + extra;
        let h = history(len, seed);
        let expected = (len / depth * depth) as f64 / len as f64;
        let paths = split(&h, depth).unwrap();
        prop_assert!((paths.total_mass() - expected).abs() <= 1e-9);
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        prop_assert!((union(&paths, &spec).unwrap().total_mass() - expected).abs() <= 1e-9);
    }

    #[test]
    fn graphing_inverts_path_decomposition(depth in 1usize..=4, b in 1usize..=3, na in 1usize..=4, seed in any::<u64>()) {
        let tree = common::random_tree(&mut from_seed(seed), depth, b, na, false);
        let rebuilt = graphing(&tree.paths(), b, na).unwrap();
        prop_assert_eq!(rebuilt, tree);
    }

    #[test]
    fn reconstructed_trees_agree_with_history(extra in 0usize..200, seed in any::<u64>()) {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        let depth = 3;
        let h = history(depth + extra, seed);
        let trees = reconstruct_trees(&h, depth, 4, &spec, &mut from_seed(seed ^ 1)).unwrap();
        for t in trees {
            prop_assert!(t.is_well_formed());
            prop_assert!(t.action(0).is_some());
            // every non-EMPTY node's action prefix must occur in some block of the history
            for n in 0..t.len() {
                if t.action(n).is_none() {
                    continue;
                }
                let obs = t.observation_prefix(n);
                let prefix = t.action_prefix(n);
                let seen = h.steps.chunks_exact(depth).any(|block| {
                    (0..=obs.len()).all(|i| Some(block[i].0) == prefix[2 * i])
                        && (0..obs.len()).all(|i| block[i].1 == obs[i])
                });
                prop_assert!(seen, "node {} not supported by the history", n);
            }
        }
    }
}

/// Pearson chi-square of roulette draws against the weight proportions, at
/// a threshold far beyond the 0.999 quantile for 4 degrees of freedom (18.5).
#[test]
fn roulette_matches_weights() {
    let weights = [0.5, 0.0, 2.0, 1.0, 3.0, 0.5];
    let total: f64 = weights.iter().sum();
    let draws = 200_000;
    let mut counts = [0usize; 6];
    let mut rng = from_seed(77);
    for _ in 0..draws {
        counts[roulette(&weights, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[1], 0);
    let chi2: f64 = weights
        .iter()
        .zip(counts)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, c)| {
            let e = draws as f64 * w / total;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    assert!(chi2 < 18.5, "chi-square {chi2}");
}
