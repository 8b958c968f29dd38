//! Plain-text tree files.
//!
//! Each tree is a header line `T=<depth> branch=<|Ω|>` followed by the
//! level-order node list, `-` for EMPTY. Trees carrying node probabilities add
//! a `probs` line. Lines starting with `#` are comments.

use std::fmt::Write as _;

use super::PolicyTree;
use crate::error::{Error, Result};

pub fn write_trees(trees: &[PolicyTree]) -> String {
    let mut out = String::new();
    for t in trees {
        let _ = writeln!(out, "T={} branch={}", t.depth(), t.branching());
        let nodes: Vec<String> = t
            .nodes()
            .iter()
            .map(|n| n.map_or_else(|| "-".to_string(), |a| a.to_string()))
            .collect();
        let _ = writeln!(out, "{}", nodes.join(" "));
        if let Some(p) = t.node_probs() {
            let probs: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "probs {}", probs.join(" "));
        }
    }
    out
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut depth = None;
    let mut branch = None;
    for field in line.split_whitespace() {
        match field.split_once('=')? {
            ("T", v) => depth = v.parse().ok(),
            ("branch", v) => branch = v.parse().ok(),
            _ => return None,
        }
    }
    Some((depth?, branch?))
}

/// Parses a tree file. The action alphabet size is not part of the format and
/// comes from the caller.
pub fn read_trees(text: &str, n_actions: usize) -> Result<Vec<PolicyTree>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let mut trees = Vec::new();
    while let Some(header) = lines.next() {
        let (depth, branch) =
            parse_header(header).ok_or_else(|| Error::parse("tree header", format!("bad header `{header}`")))?;
        let body = lines
            .next()
            .ok_or_else(|| Error::parse("tree body", "missing node list"))?;
        let nodes = body
            .split_whitespace()
            .map(|tok| match tok {
                "-" => Ok(None),
                a => a
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::parse("tree body", format!("bad node `{a}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tree = PolicyTree::new(depth, branch, n_actions, nodes)?;
        if let Some(rest) = lines.peek().and_then(|l| l.strip_prefix("probs")) {
            let probs = rest
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| Error::parse("tree probs", x.to_string())))
                .collect::<Result<Vec<_>>>()?;
            tree = tree.with_node_probs(probs)?;
            lines.next();
        }
        trees.push(tree);
    }
    Ok(trees)
}

/// One edge per line, `parent obs child action`, with node indices in level
/// order and labels from the given alphabets. Edges into EMPTY nodes are
/// skipped.
pub fn write_edge_list(tree: &PolicyTree, action_names: &[String], obs_names: &[String]) -> String {
    let mut out = String::new();
    if let Some(a) = tree.action(0) {
        let _ = writeln!(out, "# root 0 {}", action_names[a]);
    }
    for parent in 0..tree.len() {
        if tree.level(parent) == tree.depth() || tree.action(parent).is_none() {
            continue;
        }
        for o in 0..tree.branching() {
            let child = tree.child(parent, o);
            if let Some(a) = tree.action(child) {
                let _ = writeln!(out, "{parent} {} {child} {}", obs_names[o], action_names[a]);
            }
        }
    }
    out
}
