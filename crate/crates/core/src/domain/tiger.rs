//! Two-agent tiger problem.
//!
//! States: tiger behind the left or right door. Both agents listen (L) or
//! open a door (OL/OR). Opening any door resets the tiger uniformly;
//! listening leaves it in place. `j` hears a growl (left/right); `i` hears a
//! growl and also a creak revealing `j`'s last action, for six joint signals.

use serde::{Deserialize, Serialize};

use super::{check_finite, check_probability, DomainModel, DomainSpec};
use crate::error::Result;
use crate::policy_tree::PolicyTree;

pub const TIGER_LEFT: usize = 0;
pub const TIGER_RIGHT: usize = 1;

pub const LISTEN: usize = 0;
pub const OPEN_LEFT: usize = 1;
pub const OPEN_RIGHT: usize = 2;

pub const GROWL_LEFT: usize = 0;
pub const GROWL_RIGHT: usize = 1;

const CREAK_LEFT: usize = 0;
const CREAK_RIGHT: usize = 1;
const SILENCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TigerParams {
    pub listen_accuracy: f64,
    pub creak_accuracy: f64,
    pub listen_reward: f64,
    pub gold_reward: f64,
    pub tiger_penalty: f64,
    /// Reward to `i` when both agents open the gold door together.
    pub shared_gold_reward: f64,
}

impl Default for TigerParams {
    fn default() -> Self {
        Self {
            listen_accuracy: 0.85,
            creak_accuracy: 0.9,
            listen_reward: -1.0,
            gold_reward: 10.0,
            tiger_penalty: -100.0,
            shared_gold_reward: 5.0,
        }
    }
}

impl TigerParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("listen_accuracy", self.listen_accuracy)?;
        check_probability("creak_accuracy", self.creak_accuracy)?;
        check_finite("listen_reward", self.listen_reward)?;
        check_finite("gold_reward", self.gold_reward)?;
        check_finite("tiger_penalty", self.tiger_penalty)?;
        check_finite("shared_gold_reward", self.shared_gold_reward)
    }
}

fn growl(next: usize, listening: bool, accuracy: f64) -> [f64; 2] {
    if !listening {
        return [0.5, 0.5];
    }
    let mut g = [1.0 - accuracy; 2];
    g[next] = accuracy;
    g
}

pub fn tiger_spec(p: &TigerParams) -> Result<DomainSpec> {
    p.validate()?;
    let transition = |s: usize, ai: usize, aj: usize| {
        if ai == LISTEN && aj == LISTEN {
            let mut t = vec![0.0; 2];
            t[s] = 1.0;
            t
        } else {
            vec![0.5, 0.5]
        }
    };
    let observation_j = |next: usize, aj: usize| growl(next, aj == LISTEN, p.listen_accuracy).to_vec();
    let observation_i = |next: usize, ai: usize, aj: usize| {
        let g = growl(next, ai == LISTEN, p.listen_accuracy);
        let true_creak = match aj {
            OPEN_LEFT => CREAK_LEFT,
            OPEN_RIGHT => CREAK_RIGHT,
            _ => SILENCE,
        };
        let mut c = [(1.0 - p.creak_accuracy) / 2.0; 3];
        c[true_creak] = p.creak_accuracy;
        let mut o = Vec::with_capacity(6);
        for gp in g {
            for cp in c {
                o.push(gp * cp);
            }
        }
        o
    };
    let reward_i = |s: usize, ai: usize, aj: usize| match ai {
        LISTEN => p.listen_reward,
        door => {
            let tiger_door = if s == TIGER_LEFT { OPEN_LEFT } else { OPEN_RIGHT };
            if door == tiger_door {
                p.tiger_penalty
            } else if aj == door {
                p.shared_gold_reward
            } else {
                p.gold_reward
            }
        }
    };
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    DomainSpec::tabulate(DomainModel {
        name: "tiger",
        states: names(&["tiger-left", "tiger-right"]),
        actions_i: names(&["L", "OL", "OR"]),
        actions_j: names(&["L", "OL", "OR"]),
        observations_i: names(&["GL-CL", "GL-CR", "GL-S", "GR-CL", "GR-CR", "GR-S"]),
        observations_j: names(&["GL", "GR"]),
        passive_action_i: LISTEN,
        transition: &transition,
        observation_i: &observation_i,
        observation_j: &observation_j,
        reward_i: &reward_i,
        initial_belief: vec![0.5, 0.5],
    })
}

/// Default opponent: keep listening until the growl count leans two to one
/// side, then open the other door.
pub fn default_opponent_tree(depth: usize) -> PolicyTree {
    PolicyTree::from_rule(depth, 2, 3, |obs| {
        let left = obs.iter().filter(|&&o| o == GROWL_LEFT).count() as i64;
        let net = left - (obs.len() as i64 - left);
        if net >= 2 {
            OPEN_RIGHT
        } else if net <= -2 {
            OPEN_LEFT
        } else {
            LISTEN
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cardinalities() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        assert_eq!(spec.n_states(), 2);
        assert_eq!(spec.n_actions_i(), 3);
        assert_eq!(spec.n_actions_j(), 3);
        assert_eq!(spec.n_observations_i(), 6);
        assert_eq!(spec.n_observations_j(), 2);
    }

    #[test]
    fn perfect_hearing_is_deterministic() {
        let spec = tiger_spec(&TigerParams {
            listen_accuracy: 1.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(spec.transition(TIGER_LEFT, LISTEN, LISTEN), &[(TIGER_LEFT, 1.0)]);
        assert_eq!(spec.observation_j(TIGER_LEFT, LISTEN), &[1.0, 0.0]);
    }

    #[test]
    fn opening_resets_uniformly() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        for s in 0..2 {
            assert_eq!(spec.transition(s, OPEN_LEFT, LISTEN), &[(0, 0.5), (1, 0.5)]);
            assert_eq!(spec.transition(s, LISTEN, OPEN_RIGHT), &[(0, 0.5), (1, 0.5)]);
        }
    }

    #[test]
    fn one_step_open_left_under_uniform_belief() {
        let spec = tiger_spec(&TigerParams::default()).unwrap();
        // enumerate states with j listening
        let expected: f64 = (0..2)
            .map(|s| spec.initial_belief()[s] * spec.reward_i(s, OPEN_LEFT, LISTEN))
            .sum();
        assert!((expected - (-45.0)).abs() < 1e-12);
        assert_eq!(spec.reward_i(TIGER_RIGHT, OPEN_LEFT, OPEN_LEFT), 5.0);
        assert_eq!(spec.reward_i(TIGER_RIGHT, OPEN_LEFT, OPEN_RIGHT), 10.0);
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let err = tiger_spec(&TigerParams {
            listen_accuracy: 1.2,
            ..Default::default()
        });
        assert!(matches!(err, Err(crate::Error::Config(_))));
    }

    #[test]
    fn default_opponent_depth_three() {
        let t = default_opponent_tree(3);
        let a = |x| Some(x);
        assert_eq!(
            t.nodes(),
            &[a(LISTEN), a(LISTEN), a(LISTEN), a(OPEN_RIGHT), a(LISTEN), a(LISTEN), a(OPEN_LEFT)]
        );
    }
}
