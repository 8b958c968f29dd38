//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use veb_core::domain::DomainSpec;
use veb_core::policy_tree::{node_count, PolicyTree};
use veb_core::vae::VaeNetwork;

/// Random tree; with `allow_empty`, nodes go EMPTY with probability 0.3 and
/// every descendant of an EMPTY node stays EMPTY.
pub fn random_tree<R: Rng>(rng: &mut R, depth: usize, branching: usize, n_actions: usize, allow_empty: bool) -> PolicyTree {
    let n = node_count(depth, branching);
    let mut nodes: Vec<Option<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let parent_empty = i > 0 && nodes[(i - 1) / branching].is_none();
        let empty = parent_empty || (allow_empty && rng.random::<f64>() < 0.3);
        nodes.push(if empty { None } else { Some(rng.random_range(0..n_actions)) });
    }
    PolicyTree::new(depth, branching, n_actions, nodes).unwrap()
}

pub fn random_tree_with_probs<R: Rng>(rng: &mut R, depth: usize, branching: usize, n_actions: usize) -> PolicyTree {
    let t = random_tree(rng, depth, branching, n_actions, false);
    let probs = (0..t.len()).map(|_| rng.random_range(0.2..=1.0)).collect();
    t.with_node_probs(probs).unwrap()
}

/// `Σ_k x_k ln p_k + (1 − x_k) ln(1 − p_k)`, unweighted and unclamped.
pub fn plain_log_likelihood(x: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..x.len() {
        total += if x[k] == 1.0 { p[k].ln() } else { (1.0 - p[k]).ln() };
    }
    total
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    (0..b.len())
        .map(|o| {
            let mut acc = b[o];
            for i in 0..n_in {
                acc += w[o * n_in + i] * x[i];
            }
            acc
        })
        .collect()
}

/// The per-datum training objective computed from the raw tensors:
/// `−(1/(2n_s)) Σ_l Σ_k w_k (x ln x̃ + (1−x) ln(1−x̃)) + ½ Σ (μ² + σ² − 1 − ln σ²)`.
pub fn reference_objective(net: &VaeNetwork, x: &[f64], noise: &[Vec<f64>], w: &[f64], clip: f64) -> f64 {
    let h: Vec<f64> = affine(&net.enc_hidden.w, &net.enc_hidden.b, x).iter().map(|a| a.tanh()).collect();
    let mu = affine(&net.enc_mu.w, &net.enc_mu.b, &h);
    let logvar = affine(&net.enc_logvar.w, &net.enc_logvar.b, &h);
    let mut recon = 0.0;
    for eps in noise {
        let z: Vec<f64> = (0..mu.len()).map(|k| mu[k] + (logvar[k] / 2.0).exp() * eps[k]).collect();
        let g: Vec<f64> = affine(&net.dec_hidden.w, &net.dec_hidden.b, &z).iter().map(|a| a.tanh()).collect();
        let out = affine(&net.dec_out.w, &net.dec_out.b, &g);
        for k in 0..x.len() {
            let p = (1.0 / (1.0 + (-out[k]).exp())).clamp(clip, 1.0 - clip);
            recon += w[k] * (x[k] * p.ln() + (1.0 - x[k]) * (1.0 - p).ln());
        }
    }
    let kl: f64 = (0..mu.len())
        .map(|k| 0.5 * (mu[k] * mu[k] + logvar[k].exp() - 1.0 - logvar[k]))
        .sum();
    -recon / (2.0 * noise.len() as f64) + kl
}

/// One joint trajectory prefix: probability, opponent tree, state, opponent node.
#[derive(Clone, Copy, Debug)]
struct World {
    p: f64,
    k: usize,
    s: usize,
    nj: usize,
}

fn initial_worlds(spec: &DomainSpec, weights: &[f64]) -> Vec<World> {
    let mut out = Vec::new();
    for (s, &ps) in spec.initial_belief().iter().enumerate() {
        for (k, &wk) in weights.iter().enumerate() {
            out.push(World { p: ps * wk, k, s, nj: 0 });
        }
    }
    out
}

/// Every extension of every world by one step in which `i` plays `ai` and
/// observes `oi`; worlds are never merged.
fn extend(spec: &DomainSpec, trees: &[PolicyTree], worlds: &[World], ai: usize, oi: usize) -> Vec<World> {
    let mut out = Vec::new();
    for w in worlds {
        let tree = &trees[w.k];
        let aj = tree.action(w.nj).unwrap();
        for &(next, pt) in spec.transition(w.s, ai, aj) {
            let po = spec.observation_i(next, ai, aj)[oi];
            for (oj, &pj) in spec.observation_j(next, aj).iter().enumerate() {
                let p = w.p * pt * po * pj;
                if p > 0.0 {
                    out.push(World {
                        p,
                        k: w.k,
                        s: next,
                        nj: tree.child(w.nj, oj),
                    });
                }
            }
        }
    }
    out
}

/// Expected return of a fixed `i` plan, by summing over all joint paths.
pub fn enumerate_plan_value(spec: &DomainSpec, trees: &[PolicyTree], weights: &[f64], plan: &PolicyTree, horizon: usize) -> f64 {
    fn go(spec: &DomainSpec, trees: &[PolicyTree], plan: &PolicyTree, worlds: Vec<World>, hi: usize, t: usize, horizon: usize) -> f64 {
        let ai = plan.action(hi).unwrap();
        let mut total: f64 = worlds
            .iter()
            .map(|w| w.p * spec.reward_i(w.s, ai, trees[w.k].action(w.nj).unwrap()))
            .sum();
        if t + 1 < horizon {
            for oi in 0..spec.n_observations_i() {
                let next = extend(spec, trees, &worlds, ai, oi);
                if !next.is_empty() {
                    total += go(spec, trees, plan, next, plan.child(hi, oi), t + 1, horizon);
                }
            }
        }
        total
    }
    go(spec, trees, plan, initial_worlds(spec, weights), 0, 0, horizon)
}

/// Optimal expected return: at every observation history of `i`, the best
/// action by direct summation over the joint paths consistent with it.
pub fn enumerate_optimal_value(spec: &DomainSpec, trees: &[PolicyTree], weights: &[f64], horizon: usize) -> f64 {
    fn v(spec: &DomainSpec, trees: &[PolicyTree], worlds: Vec<World>, t: usize, horizon: usize) -> f64 {
        (0..spec.n_actions_i())
            .map(|ai| {
                let mut q: f64 = worlds
                    .iter()
                    .map(|w| w.p * spec.reward_i(w.s, ai, trees[w.k].action(w.nj).unwrap()))
                    .sum();
                if t + 1 < horizon {
                    for oi in 0..spec.n_observations_i() {
                        let next = extend(spec, trees, &worlds, ai, oi);
                        if !next.is_empty() {
                            q += v(spec, trees, next, t + 1, horizon);
                        }
                    }
                }
                q
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
    v(spec, trees, initial_worlds(spec, weights), 0, horizon)
}

/// Random probability vector of length `n` with entries bounded away from 0.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}
