//! Variational autoencoder over ZZOH-encoded policy trees.

mod generate;
mod io;
mod loss;
mod network;
mod train;

pub use generate::generate;
pub use io::{read_params, write_params, VaeHeader};
pub use loss::{kl_loss, loss_weights, node_height, tree_loss, tree_weight, LossWeighting, TreeShape};
pub use network::{Dense, ForwardPass, LatentSample, LossParts, VaeNetwork, TENSOR_NAMES};
pub use train::{initial_network, train, write_training_log, EpochLog, TrainConfig, TrainedVae};
