//! Tree-weighted Bernoulli reconstruction likelihood and the Gaussian KL term.

use serde::{Deserialize, Serialize};

use crate::codec::ActionAlphabet;
use crate::error::{Error, Result};
use crate::policy_tree::{node_count, node_level};

/// Per-entry weighting of the reconstruction likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LossWeighting {
    /// `w(k) = ln(1 + h(node_of(k)))`, larger near the root.
    #[default]
    Tree,
    /// `w(k) = 1`: plain binary cross-entropy.
    Uniform,
}

/// Shape shared by every tree in a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShape {
    pub depth: usize,
    pub branching: usize,
    pub n_actions: usize,
}

impl TreeShape {
    pub fn nodes(&self) -> usize {
        node_count(self.depth, self.branching)
    }

    pub fn dim(&self) -> usize {
        ActionAlphabet::new(self.n_actions).dim(self.depth, self.branching)
    }

    pub fn alphabet(&self) -> ActionAlphabet {
        ActionAlphabet::new(self.n_actions)
    }
}

/// Height `T − c + 1` of the 1-based level-order node `n` at depth `c`.
pub fn node_height(n: usize, depth: usize, branching: usize) -> Result<usize> {
    let max = node_count(depth, branching);
    if n == 0 || n > max {
        return Err(Error::OutOfRange { index: n, max });
    }
    Ok(depth + 1 - node_level(n - 1, branching))
}

/// Weight of the 1-based vector entry `k`: every entry of a node's one-hot
/// block gets `ln(1 + h(node))`.
pub fn tree_weight(k: usize, shape: &TreeShape) -> Result<f64> {
    let dim = shape.dim();
    if k == 0 || k > dim {
        return Err(Error::OutOfRange { index: k, max: dim });
    }
    let node = (k - 1) / (shape.n_actions + 1) + 1;
    let h = node_height(node, shape.depth, shape.branching)?;
    Ok((1.0 + h as f64).ln())
}

pub fn loss_weights(shape: &TreeShape, weighting: LossWeighting) -> Vec<f64> {
    match weighting {
        LossWeighting::Uniform => vec![1.0; shape.dim()],
        LossWeighting::Tree => (1..=shape.dim())
            .map(|k| tree_weight(k, shape).expect("k within D"))
            .collect(),
    }
}

/// `Σ_k w(k)·(x_k ln x̃_k + (1 − x_k) ln(1 − x̃_k))` with `x̃` clamped into
/// `[clip, 1 − clip]`. Always ≤ 0.
pub fn tree_loss(x: &[f64], x_tilde: &[f64], weights: &[f64], clip: f64) -> Result<f64> {
    if x_tilde.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: x_tilde.len(),
        });
    }
    if weights.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: weights.len(),
        });
    }
    Ok(x.iter()
        .zip(x_tilde)
        .zip(weights)
        .map(|((&xk, &pk), &w)| {
            let p = pk.clamp(clip, 1.0 - clip);
            w * (xk * p.ln() + (1.0 - xk) * (1.0 - p).ln())
        })
        .sum())
}

/// `KL(N(μ, σ²) ‖ N(0, I)) = ½ Σ (μ² + σ² − 1 − ln σ²)`.
pub fn kl_loss(mu: &[f64], sigma: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| m * m + s * s - 1.0 - (s * s).ln())
        .sum::<f64>()
}
