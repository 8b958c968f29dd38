use super::loss::TreeShape;
use super::network::VaeNetwork;
use crate::codec::{onehot_project, zzoh_decode, EncodedTree, EncodingKind};
use crate::error::{Error, Result};
use crate::policy_tree::{roulette, PolicyTree};
use crate::rng::RandomSource;

/// Draws `m` trees: each pass picks a source vector uniformly by roulette,
/// runs it through the network with fresh noise, projects every block onto
/// its most likely symbol and decodes. Each tree carries its per-node
/// projection confidences.
pub fn generate(
    net: &VaeNetwork,
    source: &[EncodedTree],
    m: usize,
    shape: TreeShape,
    rng: &mut RandomSource,
) -> Result<Vec<PolicyTree>> {
    if m == 0 {
        return Err(Error::Config("number of generated trees must be at least 1".into()));
    }
    if source.is_empty() {
        return Err(Error::EmptyInput("generation source".into()));
    }
    let alphabet = shape.alphabet();
    let uniform = vec![1.0; source.len()];
    (0..m)
        .map(|_| {
            let x = &source[roulette(&uniform, rng)?];
            let eps = net.sample_noise(rng);
            let pass = net.forward(&x.values, &eps)?;
            let prob = EncodedTree {
                values: pass.x_tilde,
                kind: EncodingKind::Prob,
            };
            let (binary, probs) = onehot_project(&prob, &alphabet)?;
            zzoh_decode(&binary, shape.depth, shape.branching, &alphabet)?.with_node_probs(probs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::zzoh_encode;
    use crate::domain::tiger;
    use crate::rng::from_seed;

    #[test]
    fn generation_is_reproducible_and_carries_probs() {
        let shape = TreeShape {
            depth: 3,
            branching: 2,
            n_actions: 3,
        };
        let net = VaeNetwork::init(shape.dim(), 6, 2, &mut from_seed(3));
        let src = vec![zzoh_encode(&tiger::default_opponent_tree(3), &shape.alphabet()).unwrap()];
        let a = generate(&net, &src, 5, shape, &mut from_seed(9)).unwrap();
        let b = generate(&net, &src, 5, shape, &mut from_seed(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        for t in &a {
            let p = t.node_probs().unwrap();
            assert_eq!(p.len(), 7);
            assert!(p.iter().all(|&p| p > 0.0 && p <= 1.0));
        }
    }

    #[test]
    fn rejects_empty_requests() {
        let shape = TreeShape {
            depth: 2,
            branching: 2,
            n_actions: 3,
        };
        let net = VaeNetwork::zeros(shape.dim(), 4, 2);
        let src = vec![zzoh_encode(&tiger::default_opponent_tree(2), &shape.alphabet()).unwrap()];
        assert!(generate(&net, &src, 0, shape, &mut from_seed(1)).is_err());
        assert!(generate(&net, &[], 3, shape, &mut from_seed(1)).is_err());
    }
}
