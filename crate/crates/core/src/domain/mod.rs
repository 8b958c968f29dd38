//! Two-agent decision problems and opponent history simulation.
//!
//! A [`DomainSpec`] holds the complete joint model seen from the subject agent
//! `i`: states, both action sets, both observation sets, the joint transition
//! kernel, both observation kernels and `i`'s reward. Tables are dense except
//! for transitions, which are stored sparsely because the UAV grid kernel has
//! at most four successors per joint action.

mod history;
pub mod tiger;
pub mod uav;

pub use history::{simulate_history, GroundTruthPolicy, InteractionHistory};
pub use tiger::{tiger_spec, TigerParams};
pub use uav::{uav_spec, UavParams};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// Sparse distribution over successor states: `(state, probability)` pairs
/// with strictly positive probabilities, in increasing state order.
pub type SparseDist = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub name: String,
    pub states: Vec<String>,
    pub actions_i: Vec<String>,
    pub actions_j: Vec<String>,
    pub observations_i: Vec<String>,
    pub observations_j: Vec<String>,
    /// Action `i` takes while the opponent history is being recorded.
    pub passive_action_i: usize,
    transition: Vec<SparseDist>,
    observation_i: Vec<Vec<f64>>,
    observation_j: Vec<Vec<f64>>,
    reward_i: Vec<f64>,
    initial_belief: Vec<f64>,
}

/// Callback-based description used to tabulate a [`DomainSpec`].
pub struct DomainModel<'a> {
    pub name: &'a str,
    pub states: Vec<String>,
    pub actions_i: Vec<String>,
    pub actions_j: Vec<String>,
    pub observations_i: Vec<String>,
    pub observations_j: Vec<String>,
    pub passive_action_i: usize,
    pub transition: &'a dyn Fn(usize, usize, usize) -> Vec<f64>,
    pub observation_i: &'a dyn Fn(usize, usize, usize) -> Vec<f64>,
    pub observation_j: &'a dyn Fn(usize, usize) -> Vec<f64>,
    pub reward_i: &'a dyn Fn(usize, usize, usize) -> f64,
    pub initial_belief: Vec<f64>,
}

impl DomainSpec {
    /// Tabulates and validates a model. Every distribution must be
    /// non-negative and sum to one within 1e-9.
    pub fn tabulate(model: DomainModel<'_>) -> Result<Self> {
        let ns = model.states.len();
        let nai = model.actions_i.len();
        let naj = model.actions_j.len();
        let noi = model.observations_i.len();
        let noj = model.observations_j.len();
        if ns == 0 || nai == 0 || naj == 0 || noi == 0 || noj == 0 {
            return Err(Error::Config(format!("{}: every set must be non-empty", model.name)));
        }
        if model.passive_action_i >= nai {
            return Err(Error::Config("passive action out of range".into()));
        }

        let mut transition = Vec::with_capacity(ns * nai * naj);
        let mut observation_i = Vec::with_capacity(ns * nai * naj);
        let mut reward_i = Vec::with_capacity(ns * nai * naj);
        for s in 0..ns {
            for ai in 0..nai {
                for aj in 0..naj {
                    let dense = (model.transition)(s, ai, aj);
                    check_dist(&dense, ns, || format!("transition({s},{ai},{aj})"))?;
                    transition.push(
                        dense
                            .iter()
                            .enumerate()
                            .filter(|(_, &p)| p > 0.0)
                            .map(|(k, &p)| (k, p))
                            .collect(),
                    );
                    let oi = (model.observation_i)(s, ai, aj);
                    check_dist(&oi, noi, || format!("observation_i({s},{ai},{aj})"))?;
                    observation_i.push(oi);
                    let r = (model.reward_i)(s, ai, aj);
                    if !r.is_finite() {
                        return Err(Error::Config(format!("reward_i({s},{ai},{aj}) is not finite")));
                    }
                    reward_i.push(r);
                }
            }
        }
        let mut observation_j = Vec::with_capacity(ns * naj);
        for s in 0..ns {
            for aj in 0..naj {
                let oj = (model.observation_j)(s, aj);
                check_dist(&oj, noj, || format!("observation_j({s},{aj})"))?;
                observation_j.push(oj);
            }
        }
        check_dist(&model.initial_belief, ns, || "initial_belief".to_string())?;

        Ok(Self {
            name: model.name.to_string(),
            states: model.states,
            actions_i: model.actions_i,
            actions_j: model.actions_j,
            observations_i: model.observations_i,
            observations_j: model.observations_j,
            passive_action_i: model.passive_action_i,
            transition,
            observation_i,
            observation_j,
            reward_i,
            initial_belief: model.initial_belief,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }
    pub fn n_actions_i(&self) -> usize {
        self.actions_i.len()
    }
    pub fn n_actions_j(&self) -> usize {
        self.actions_j.len()
    }
    pub fn n_observations_i(&self) -> usize {
        self.observations_i.len()
    }
    pub fn n_observations_j(&self) -> usize {
        self.observations_j.len()
    }

    fn joint(&self, s: usize, ai: usize, aj: usize) -> usize {
        (s * self.n_actions_i() + ai) * self.n_actions_j() + aj
    }

    pub fn transition(&self, s: usize, ai: usize, aj: usize) -> &[(usize, f64)] {
        &self.transition[self.joint(s, ai, aj)]
    }

    /// Distribution over `i`'s observations after landing in `next`.
    pub fn observation_i(&self, next: usize, ai: usize, aj: usize) -> &[f64] {
        &self.observation_i[self.joint(next, ai, aj)]
    }

    /// Distribution over `j`'s observations after landing in `next`.
    pub fn observation_j(&self, next: usize, aj: usize) -> &[f64] {
        &self.observation_j[next * self.n_actions_j() + aj]
    }

    pub fn reward_i(&self, s: usize, ai: usize, aj: usize) -> f64 {
        self.reward_i[self.joint(s, ai, aj)]
    }

    pub fn initial_belief(&self) -> &[f64] {
        &self.initial_belief
    }
}

fn check_dist(p: &[f64], n: usize, what: impl Fn() -> String) -> Result<()> {
    if p.len() != n {
        return Err(Error::Config(format!("{}: expected {n} entries, got {}", what(), p.len())));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::Config(format!("{}: negative or non-finite probability", what())));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::Config(format!("{}: sums to {sum}", what())));
    }
    Ok(())
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Config(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Config(format!("{name} = {x} is not finite")));
    }
    Ok(())
}

/// Draws an index from a categorical distribution given as `(index, p)` pairs.
pub(crate) fn sample_from<R: rand::Rng + ?Sized>(
    items: impl IntoIterator<Item = (usize, f64)>,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in items {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

pub(crate) fn sample_dense<R: rand::Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    sample_from(p.iter().copied().enumerate(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_all_normalized(spec: &DomainSpec) {
        for s in 0..spec.n_states() {
            for ai in 0..spec.n_actions_i() {
                for aj in 0..spec.n_actions_j() {
                    let t: f64 = spec.transition(s, ai, aj).iter().map(|(_, p)| p).sum();
                    assert!((t - 1.0).abs() <= 1e-9);
                    let oi: f64 = spec.observation_i(s, ai, aj).iter().sum();
                    assert!((oi - 1.0).abs() <= 1e-9);
                }
                for aj in 0..spec.n_actions_j() {
                    let oj: f64 = spec.observation_j(s, aj).iter().sum();
                    assert!((oj - 1.0).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn default_domains_are_normalized() {
        assert_all_normalized(&tiger_spec(&TigerParams::default()).unwrap());
        assert_all_normalized(&uav_spec(&UavParams::default()).unwrap());
    }

    #[test]
    fn tabulate_rejects_unnormalized_tables() {
        let t = |_: usize, _: usize, _: usize| vec![0.5, 0.4];
        let oi = |_: usize, _: usize, _: usize| vec![1.0];
        let oj = |_: usize, _: usize| vec![1.0];
        let r = |_: usize, _: usize, _: usize| 0.0;
        let err = DomainSpec::tabulate(DomainModel {
            name: "bad",
            states: vec!["a".into(), "b".into()],
            actions_i: vec!["x".into()],
            actions_j: vec!["y".into()],
            observations_i: vec!["o".into()],
            observations_j: vec!["o".into()],
            passive_action_i: 0,
            transition: &t,
            observation_i: &oi,
            observation_j: &oj,
            reward_i: &r,
            initial_belief: vec![0.5, 0.5],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
