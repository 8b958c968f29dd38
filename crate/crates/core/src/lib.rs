//! Learning opponent behavior models from a single interaction history.
//!
//! The crate reconstructs (possibly incomplete) policy trees for an opponent
//! agent from its action-observation history, trains a tree-weighted
//! variational autoencoder on their one-hot serialization, generates new
//! complete trees, picks a top-K subset by a diversity or confusion score, and
//! finally measures how well a subject agent's exact best response against
//! that subset performs against the opponent's true behavior.
//!
//! Module map:
//!
//! - [`domain`]: the Tiger and UAV two-agent problems and history simulation.
//! - [`policy_tree`]: the tree type and the split/union/roulette/graphing operators.
//! - [`codec`]: zig-zag one-hot encoding and one-hot projection.
//! - [`vae`]: the from-scratch VAE, its losses and SGD training.
//! - [`selection`]: MDF/ICD scores and top-K subset selection.
//! - [`evaluator`]: best response by belief-tree backward induction and episode rollouts.
//! - [`pipeline`]: experiment configuration, stage artifacts, `run` and `sweep`.

pub mod codec;
pub mod domain;
pub mod error;
pub mod evaluator;
pub mod pipeline;
pub mod policy_tree;
pub mod rng;
pub mod selection;
pub mod vae;

pub use error::{Error, Result};
