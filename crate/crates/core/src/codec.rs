//! Zig-zag one-hot (ZZOH) serialization of policy trees.
//!
//! The action alphabet is enlarged with an EMPTY symbol `a₀` at position 0,
//! and each level-order node becomes one one-hot block of `|A|+1` entries.
//! The vector length is `D = (|A|+1)·(|Ω|^T − 1)/(|Ω| − 1)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy_tree::{node_count, PolicyTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingKind {
    Binary,
    Prob,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTree {
    pub values: Vec<f64>,
    pub kind: EncodingKind,
}

/// `{a₀, a₁, …, a_|A|}` with `a₀ = EMPTY`; row `k` of the one-hot table is the
/// `k`-th unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionAlphabet {
    n_actions: usize,
}

impl ActionAlphabet {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// `|A| + 1`.
    pub fn block(&self) -> usize {
        self.n_actions + 1
    }

    /// Position of a node symbol in its block.
    pub fn symbol(&self, node: Option<usize>) -> usize {
        node.map_or(0, |a| a + 1)
    }

    pub fn one_hot(&self, node: Option<usize>) -> Vec<f64> {
        let mut v = vec![0.0; self.block()];
        v[self.symbol(node)] = 1.0;
        v
    }

    pub fn dim(&self, depth: usize, branching: usize) -> usize {
        self.block() * node_count(depth, branching)
    }
}

pub fn zzoh_encode(tree: &PolicyTree, alphabet: &ActionAlphabet) -> Result<EncodedTree> {
    if tree.n_actions() != alphabet.n_actions() {
        return Err(Error::Codec(format!(
            "tree has {} actions, alphabet {}",
            tree.n_actions(),
            alphabet.n_actions()
        )));
    }
    let mut values = vec![0.0; alphabet.block() * tree.len()];
    for (n, &node) in tree.nodes().iter().enumerate() {
        values[n * alphabet.block() + alphabet.symbol(node)] = 1.0;
    }
    Ok(EncodedTree {
        values,
        kind: EncodingKind::Binary,
    })
}

pub fn zzoh_decode(
    x: &EncodedTree,
    depth: usize,
    branching: usize,
    alphabet: &ActionAlphabet,
) -> Result<PolicyTree> {
    let dim = alphabet.dim(depth, branching);
    if x.values.len() != dim {
        return Err(Error::Codec(format!("vector length {} does not match D = {dim}", x.values.len())));
    }
    let nodes = x
        .values
        .chunks_exact(alphabet.block())
        .enumerate()
        .map(|(n, block)| {
            let mut hot = None;
            for (k, &v) in block.iter().enumerate() {
                if v == 1.0 {
                    if hot.is_some() {
                        return Err(Error::Codec(format!("block {n} has more than one 1")));
                    }
                    hot = Some(k);
                } else if v != 0.0 {
                    return Err(Error::Codec(format!("block {n} has non-binary entry {v}")));
                }
            }
            match hot {
                None => Err(Error::Codec(format!("block {n} has no 1"))),
                Some(0) => Ok(None),
                Some(k) => Ok(Some(k - 1)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PolicyTree::new(depth, branching, alphabet.n_actions(), nodes)
}

/// Projects network outputs onto valid one-hot blocks: the largest entry of
/// each block wins (lowest index on ties). Also returns the per-node
/// confidence `max / sum` of each block.
pub fn onehot_project(x: &EncodedTree, alphabet: &ActionAlphabet) -> Result<(EncodedTree, Vec<f64>)> {
    let block = alphabet.block();
    if !x.values.len().is_multiple_of(block) {
        return Err(Error::Codec(format!(
            "vector length {} is not a multiple of the block size {block}",
            x.values.len()
        )));
    }
    let mut values = vec![0.0; x.values.len()];
    let mut probs = Vec::with_capacity(x.values.len() / block);
    for (n, chunk) in x.values.chunks_exact(block).enumerate() {
        let sum: f64 = chunk.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::DegenerateOutput { block: n });
        }
        let mut best = 0;
        for k in 1..block {
            if chunk[k] > chunk[best] {
                best = k;
            }
        }
        values[n * block + best] = 1.0;
        probs.push(chunk[best] / sum);
    }
    Ok((
        EncodedTree {
            values,
            kind: EncodingKind::Binary,
        },
        probs,
    ))
}

/// One whitespace-separated line per vector under a `# A=.. O=.. T=..` header.
pub fn write_matrix(rows: &[EncodedTree], n_actions: usize, branching: usize, depth: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# A={n_actions} O={branching} T={depth}");
    for r in rows {
        let line: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Inverse of [`write_matrix`]; returns `(A, O, T)` and the rows as binary
/// encodings.
pub fn read_matrix(text: &str) -> Result<((usize, usize, usize), Vec<EncodedTree>)> {
    let mut shape = None;
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(h) = line.strip_prefix('#') {
            let mut f = (None, None, None);
            for kv in h.split_whitespace() {
                match kv.split_once('=') {
                    Some(("A", v)) => f.0 = v.parse().ok(),
                    Some(("O", v)) => f.1 = v.parse().ok(),
                    Some(("T", v)) => f.2 = v.parse().ok(),
                    _ => {}
                }
            }
            if let (Some(a), Some(o), Some(t)) = f {
                shape = Some((a, o, t));
            }
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| Error::parse("encoded matrix", v.to_string())))
            .collect::<Result<Vec<_>>>()?;
        rows.push(EncodedTree {
            values,
            kind: EncodingKind::Binary,
        });
    }
    let shape = shape.ok_or_else(|| Error::parse("encoded matrix", "missing `# A= O= T=` header"))?;
    let dim = ActionAlphabet::new(shape.0).dim(shape.2, shape.1);
    if let Some(r) = rows.iter().find(|r| r.values.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: r.values.len(),
        });
    }
    Ok((shape, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(bits: &str) -> EncodedTree {
        EncodedTree {
            values: bits
                .chars()
                .filter(|c| *c == '0' || *c == '1')
                .map(|c| if c == '1' { 1.0 } else { 0.0 })
                .collect(),
            kind: EncodingKind::Binary,
        }
    }

    #[test]
    fn dimensions() {
        assert_eq!(ActionAlphabet::new(3).dim(2, 2), 12);
        assert_eq!(ActionAlphabet::new(3).dim(3, 2), 28);
        assert_eq!(ActionAlphabet::new(5).dim(3, 4), 126);
    }

    #[test]
    fn alphabet_table_is_identity() {
        let a = ActionAlphabet::new(3);
        assert_eq!(a.one_hot(None), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(a.one_hot(Some(2)), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn encode_examples() {
        let a = ActionAlphabet::new(3);
        let full = PolicyTree::new(2, 2, 3, vec![Some(0), Some(1), Some(2)]).unwrap();
        assert_eq!(zzoh_encode(&full, &a).unwrap(), bin("0100|0010|0001"));
        let gap = PolicyTree::new(2, 2, 3, vec![Some(0), None, Some(2)]).unwrap();
        assert_eq!(zzoh_encode(&gap, &a).unwrap(), bin("0100|1000|0001"));
    }

    #[test]
    fn decode_examples() {
        let a = ActionAlphabet::new(3);
        let t = zzoh_decode(&bin("0100|0010|0001"), 2, 2, &a).unwrap();
        assert_eq!(t.nodes(), &[Some(0), Some(1), Some(2)]);
        let t = zzoh_decode(&bin("1000|1000|1000"), 2, 2, &a).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn decode_rejects_malformed_blocks() {
        let a = ActionAlphabet::new(3);
        assert!(matches!(zzoh_decode(&bin("0000|0010|0001"), 2, 2, &a), Err(Error::Codec(_))));
        assert!(matches!(zzoh_decode(&bin("0110|0010|0001"), 2, 2, &a), Err(Error::Codec(_))));
        assert!(matches!(zzoh_decode(&bin("0100|0010"), 2, 2, &a), Err(Error::Codec(_))));
    }

    #[test]
    fn projection_examples() {
        let a = ActionAlphabet::new(3);
        let x = EncodedTree {
            values: vec![0.1, 0.7, 0.1, 0.1, 0.25, 0.25, 0.25, 0.25, 0.2, 0.2, 0.4, 0.2],
            kind: EncodingKind::Prob,
        };
        let (b, p) = onehot_project(&x, &a).unwrap();
        assert_eq!(b, bin("0100|1000|0010"));
        let expect = [0.7, 0.25, 0.4];
        for (got, want) in p.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rejects_zero_block() {
        let a = ActionAlphabet::new(1);
        let x = EncodedTree {
            values: vec![0.3, 0.2, 0.0, 0.0],
            kind: EncodingKind::Prob,
        };
        assert!(matches!(onehot_project(&x, &a), Err(Error::DegenerateOutput { block: 1 })));
    }

    #[test]
    fn matrix_file_roundtrip() {
        let rows = vec![bin("0100|0010|0001"), bin("1000|0001|0100")];
        let text = write_matrix(&rows, 3, 2, 2);
        let (shape, back) = read_matrix(&text).unwrap();
        assert_eq!(shape, (3, 2, 2));
        assert_eq!(back, rows);
    }
}
