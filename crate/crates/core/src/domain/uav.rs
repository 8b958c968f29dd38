//! Pursuit-evasion on a 3×3 grid.
//!
//! `i` (the chaser) tries to land on `j`'s cell before `j` reaches the safe
//! house. A state is the joint position, 9·9 = 81 states. Each agent moves
//! N/S/E/W or stays; a move succeeds with `move_success` and otherwise leaves
//! the agent in place, and moves off the grid stay put. Each agent observes
//! the quadrant bearing of the other one, correct with
//! `observation_accuracy`. Capture and escape are absorbing.
//!
//! `i`'s reward for a joint action is the expected reward of the landing
//! state: `capture_reward` if both share a cell, `escape_penalty` if `j` sits
//! on the safe house, `step_reward` otherwise. Absorbing states keep paying
//! their reward every step.

use serde::{Deserialize, Serialize};

use super::{check_finite, check_probability, DomainModel, DomainSpec};
use crate::error::{Error, Result};
use crate::policy_tree::PolicyTree;

pub const GRID: usize = 3;
const CELLS: usize = GRID * GRID;

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const STAY: usize = 4;

/// Bearings of the other agent: north-east, north-west, south-east, south-west.
pub const BEARING_NE: usize = 0;
pub const BEARING_NW: usize = 1;
pub const BEARING_SE: usize = 2;
pub const BEARING_SW: usize = 3;

/// `(row, col)`, row 0 at the top.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavParams {
    pub safe_house: Cell,
    pub i_start: Cell,
    /// `j` starts uniformly at one of these cells.
    pub j_starts: Vec<Cell>,
    pub move_success: f64,
    pub observation_accuracy: f64,
    pub capture_reward: f64,
    pub escape_penalty: f64,
    pub step_reward: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            safe_house: (0, 2),
            i_start: (1, 2),
            j_starts: vec![(2, 0), (1, 0)],
            move_success: 0.9,
            observation_accuracy: 0.9,
            capture_reward: 50.0,
            escape_penalty: -50.0,
            step_reward: -1.0,
        }
    }
}

impl UavParams {
    pub fn validate(&self) -> Result<()> {
        let in_grid = |name: &str, c: Cell| {
            if c.0 < GRID && c.1 < GRID {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {c:?} is outside the {GRID}x{GRID} grid")))
            }
        };
        in_grid("safe_house", self.safe_house)?;
        in_grid("i_start", self.i_start)?;
        if self.j_starts.is_empty() {
            return Err(Error::Config("j_starts is empty".into()));
        }
        for &c in &self.j_starts {
            in_grid("j_start", c)?;
            if c == self.i_start {
                return Err(Error::Config(format!("j start {c:?} coincides with i_start")));
            }
        }
        if self.i_start == self.safe_house {
            return Err(Error::Config("i_start coincides with the safe house".into()));
        }
        check_probability("move_success", self.move_success)?;
        check_probability("observation_accuracy", self.observation_accuracy)?;
        check_finite("capture_reward", self.capture_reward)?;
        check_finite("escape_penalty", self.escape_penalty)?;
        check_finite("step_reward", self.step_reward)
    }
}

pub fn cell_index(c: Cell) -> usize {
    c.0 * GRID + c.1
}

fn cell_of(idx: usize) -> Cell {
    (idx / GRID, idx % GRID)
}

/// State index for a joint position.
pub fn state_index(i: Cell, j: Cell) -> usize {
    cell_index(i) * CELLS + cell_index(j)
}

pub fn positions(state: usize) -> (Cell, Cell) {
    (cell_of(state / CELLS), cell_of(state % CELLS))
}

fn step(c: Cell, action: usize) -> Cell {
    let (r, col) = c;
    match action {
        NORTH if r > 0 => (r - 1, col),
        SOUTH if r + 1 < GRID => (r + 1, col),
        EAST if col + 1 < GRID => (r, col + 1),
        WEST if col > 0 => (r, col - 1),
        _ => c,
    }
}

/// Quadrant of `other` as seen from `me`; same row counts as north, same
/// column as east.
pub fn bearing(me: Cell, other: Cell) -> usize {
    let north = other.0 <= me.0;
    let east = other.1 >= me.1;
    match (north, east) {
        (true, true) => BEARING_NE,
        (true, false) => BEARING_NW,
        (false, true) => BEARING_SE,
        (false, false) => BEARING_SW,
    }
}

fn noisy(correct: usize, accuracy: f64) -> Vec<f64> {
    let mut o = vec![(1.0 - accuracy) / 3.0; 4];
    o[correct] = accuracy;
    o
}

fn moves(c: Cell, action: usize, success: f64) -> [(Cell, f64); 2] {
    [(step(c, action), success), (c, 1.0 - success)]
}

pub fn uav_spec(p: &UavParams) -> Result<DomainSpec> {
    p.validate()?;
    let absorbing = |s: usize| {
        let (ci, cj) = positions(s);
        ci == cj || cj == p.safe_house
    };
    let landing_reward = |s: usize| {
        let (ci, cj) = positions(s);
        if ci == cj {
            p.capture_reward
        } else if cj == p.safe_house {
            p.escape_penalty
        } else {
            p.step_reward
        }
    };
    let transition = |s: usize, ai: usize, aj: usize| {
        let mut t = vec![0.0; CELLS * CELLS];
        if absorbing(s) {
            t[s] = 1.0;
            return t;
        }
        let (ci, cj) = positions(s);
        for (ni, pi) in moves(ci, ai, p.move_success) {
            for (nj, pj) in moves(cj, aj, p.move_success) {
                t[state_index(ni, nj)] += pi * pj;
            }
        }
        t
    };
    let reward_i = |s: usize, ai: usize, aj: usize| {
        transition(s, ai, aj)
            .iter()
            .enumerate()
            .map(|(n, &q)| q * landing_reward(n))
            .sum()
    };
    let observation_i = |next: usize, _ai: usize, _aj: usize| {
        let (ci, cj) = positions(next);
        noisy(bearing(ci, cj), p.observation_accuracy)
    };
    let observation_j = |next: usize, _aj: usize| {
        let (ci, cj) = positions(next);
        noisy(bearing(cj, ci), p.observation_accuracy)
    };
    let mut initial_belief = vec![0.0; CELLS * CELLS];
    let w = 1.0 / p.j_starts.len() as f64;
    for &c in &p.j_starts {
        initial_belief[state_index(p.i_start, c)] += w;
    }
    let states = (0..CELLS * CELLS)
        .map(|s| {
            let (a, b) = positions(s);
            format!("i{}{}-j{}{}", a.0, a.1, b.0, b.1)
        })
        .collect();
    let moves_names: Vec<String> = ["N", "S", "E", "W", "Stay"].iter().map(|s| s.to_string()).collect();
    let bearings: Vec<String> = ["NE", "NW", "SE", "SW"].iter().map(|s| s.to_string()).collect();
    DomainSpec::tabulate(DomainModel {
        name: "uav",
        states,
        actions_i: moves_names.clone(),
        actions_j: moves_names,
        observations_i: bearings.clone(),
        observations_j: bearings,
        passive_action_i: STAY,
        transition: &transition,
        observation_i: &observation_i,
        observation_j: &observation_j,
        reward_i: &reward_i,
        initial_belief,
    })
}

/// Default evader: alternate east and north moves toward a top-right safe
/// house, holding position whenever the chaser was last seen to the north-east.
pub fn default_opponent_tree(depth: usize) -> PolicyTree {
    PolicyTree::from_rule(depth, 4, 5, |obs| match obs.last() {
        Some(&BEARING_NE) => STAY,
        _ if obs.len() % 2 == 0 => EAST,
        _ => NORTH,
    })
}
