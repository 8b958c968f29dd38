mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use veb_core::policy_tree::PolicyTree;
use veb_core::rng::from_seed;
use veb_core::selection::{icd, mdf, score, top_k, CandidateSet, MetricKind, Provenance, SelectionMode};

fn trees(seed: u64, n: usize) -> Vec<PolicyTree> {
    let mut rng = from_seed(seed);
    (0..n).map(|_| common::random_tree_with_probs(&mut rng, 3, 2, 3)).collect()
}

proptest! {
    #[test]
    fn scores_are_permutation_invariant(seed in any::<u64>(), n in 1usize..10) {
        let ts = trees(seed, n);
        let mut shuffled: Vec<&PolicyTree> = ts.iter().collect();
        shuffled.shuffle(&mut from_seed(seed.wrapping_add(1)));
        let original: Vec<&PolicyTree> = ts.iter().collect();
        prop_assert_eq!(mdf(&original).unwrap(), mdf(&shuffled).unwrap());
        prop_assert!((icd(&original).unwrap() - icd(&shuffled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scores_grow_with_supersets(seed in any::<u64>(), n in 1usize..8) {
        let ts = trees(seed, n + 1);
        let small: Vec<&PolicyTree> = ts[..n].iter().collect();
        let big: Vec<&PolicyTree> = ts.iter().collect();
        prop_assert!(mdf(&big).unwrap() >= mdf(&small).unwrap());
        prop_assert!(icd(&big).unwrap() >= icd(&small).unwrap());
        prop_assert!(mdf(&small).unwrap() >= 2.0);
        prop_assert!(icd(&small).unwrap() >= 0.0);
    }

    #[test]
    fn selections_are_sorted_and_sized(seed in any::<u64>(), n in 1usize..12, k_frac in 0.0f64..1.0) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let c = CandidateSet::new(trees(seed, n), Provenance::default()).unwrap();
        for metric in [MetricKind::Mdf, MetricKind::Icd] {
            let picked = top_k(&c, k, metric, SelectionMode::Greedy).unwrap();
            prop_assert_eq!(picked.len(), k);
            prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn greedy_mdf_is_close_to_exhaustive() {
    for seed in 0..40 {
        let c = CandidateSet::new(trees(seed, 8), Provenance::default()).unwrap();
        let value = |idx: Vec<usize>| {
            let refs: Vec<&PolicyTree> = idx.iter().map(|&i| &c.trees()[i]).collect();
            score(&refs, MetricKind::Mdf).unwrap()
        };
        let greedy = value(top_k(&c, 3, MetricKind::Mdf, SelectionMode::Greedy).unwrap());
        let best = value(top_k(&c, 3, MetricKind::Mdf, SelectionMode::Exhaustive).unwrap());
        assert!(greedy >= 0.63 * best, "seed {seed}: greedy {greedy}, exhaustive {best}");
        assert!(greedy <= best + 1e-12);
    }
}

#[test]
fn greedy_icd_is_exact() {
    for seed in 0..20 {
        let c = CandidateSet::new(trees(seed, 7), Provenance::default()).unwrap();
        for k in 1..=7 {
            let g = top_k(&c, k, MetricKind::Icd, SelectionMode::Greedy).unwrap();
            let e = top_k(&c, k, MetricKind::Icd, SelectionMode::Exhaustive).unwrap();
            let value = |idx: &[usize]| {
                let refs: Vec<&PolicyTree> = idx.iter().map(|&i| &c.trees()[i]).collect();
                icd(&refs).unwrap()
            };
            assert!((value(&g) - value(&e)).abs() < 1e-12);
        }
    }
}
