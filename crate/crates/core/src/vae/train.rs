use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{loss_weights, LossWeighting, TreeShape};
use super::network::VaeNetwork;
use crate::codec::EncodedTree;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, from_seed};


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub sampling_size: usize,
    pub max_epochs: usize,
    /// Training stops once the mean epoch loss of the latest window improves
    /// on the previous window by less than this.
    pub convergence_tol: f64,
    /// Epochs per window of the convergence test.
    pub convergence_window: usize,
    /// Windows without improvement tolerated before stopping.
    pub convergence_patience: usize,
    pub prob_clip: f64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub weighting: LossWeighting,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 8,
            sampling_size: 2,
            max_epochs: 2000,
            convergence_tol: 1e-5,
            convergence_window: 50,
            convergence_patience: 3,
            prob_clip: 1e-6,
            hidden_dim: 64,
            latent_dim: 8,
            weighting: LossWeighting::Tree,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.sampling_size == 0 {
            return Err(Error::Config("batch_size and sampling_size must be at least 1".into()));
        }
        if !(self.prob_clip > 0.0 && self.prob_clip < 0.5) {
            return Err(Error::Config(format!("prob_clip must lie in (0, 0.5), got {}", self.prob_clip)));
        }
        if self.convergence_window == 0 || self.convergence_patience == 0 {
            return Err(Error::Config("convergence_window and convergence_patience must be at least 1".into()));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return Err(Error::Config("hidden_dim and latent_dim must be at least 1".into()));
        }
        if self.convergence_tol.is_nan() {
            return Err(Error::Config("convergence_tol must be a number".into()));
        }
        Ok(())
    }
}

/// Mean per-datum losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub recon_loss: f64,
    pub kl_loss: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedVae {
    pub net: VaeNetwork,
    pub log: Vec<EpochLog>,
    pub shape: TreeShape,
    pub config: TrainConfig,
}

impl TrainedVae {
    pub fn epochs(&self) -> usize {
        self.log.len()
    }

    pub fn final_loss(&self) -> f64 {
        self.log.last().map_or(f64::NAN, |l| l.total)
    }
}

/// Early stopping over non-overlapping windows of epochs: training ends once
/// `patience` consecutive windows fail to lower the best window-mean loss by
/// at least `tol`.
#[derive(Debug)]
struct Plateau {
    window: usize,
    patience: usize,
    tol: f64,
    best: f64,
    stale: usize,
}

impl Plateau {
    fn new(cfg: &TrainConfig) -> Self {
        Self {
            window: cfg.convergence_window,
            patience: cfg.convergence_patience,
            tol: cfg.convergence_tol,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    fn converged(&mut self, log: &[EpochLog]) -> bool {
        if !log.len().is_multiple_of(self.window) {
            return false;
        }
        let cur = log[log.len() - self.window..].iter().map(|l| l.total).sum::<f64>() / self.window as f64;
        if cur < self.best - self.tol {
            self.best = cur;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.stale >= self.patience
    }
}

/// The network `train` starts from for this configuration.
pub fn initial_network(input_dim: usize, cfg: &TrainConfig) -> VaeNetwork {
    let mut rng = from_seed(derive_seed(cfg.seed, "vae-init"));
    VaeNetwork::init(input_dim, cfg.hidden_dim, cfg.latent_dim, &mut rng)
}

/// Mini-batch SGD on the summed per-datum objective. Each epoch visits the
/// data in a fresh seeded order; each datum gets `sampling_size` noise draws.
pub fn train(data: &[EncodedTree], shape: TreeShape, cfg: &TrainConfig) -> Result<TrainedVae> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("training set".into()));
    }
    let dim = shape.dim();
    if let Some(bad) = data.iter().find(|x| x.values.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            actual: bad.values.len(),
        });
    }
    let weights = loss_weights(&shape, cfg.weighting);
    let mut net = initial_network(dim, cfg);
    let mut rng = from_seed(derive_seed(cfg.seed, "vae-train"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::new();
    let mut plateau = Plateau::new(cfg);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut recon, mut kl) = (0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = net.zeros_like();
            for &i in batch {
                let noise: Vec<Vec<f64>> = (0..cfg.sampling_size).map(|_| net.sample_noise(&mut rng)).collect();
                let (parts, g) = net.loss_and_grad(&data[i].values, &noise, &weights, cfg.prob_clip)?;
                recon += parts.recon;
                kl += parts.kl;
                grad.add_scaled(&g, 1.0);
            }
            net.add_scaled(&grad, -cfg.learning_rate);
        }
        let n = data.len() as f64;
        let entry = EpochLog {
            epoch,
            recon_loss: recon / n,
            kl_loss: kl / n,
            total: (recon + kl) / n,
        };
        if !entry.total.is_finite() || !net.is_finite() {
            return Err(Error::Divergence {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
        log.push(entry);
        if plateau.converged(&log) {
            break;
        }
    }

    Ok(TrainedVae {
        net,
        log,
        shape,
        config: cfg.clone(),
    })
}

/// CSV with header `epoch,recon_loss,kl_loss,total`.
pub fn write_training_log(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,recon_loss,kl_loss,total\n");
    for l in log {
        out.push_str(&format!("{},{},{},{}\n", l.epoch, l.recon_loss, l.kl_loss, l.total));
    }
    out
}
