//! Single-hidden-layer Bernoulli VAE with hand-written backpropagation.
//!
//! Encoder: `h = tanh(W₁x + b₁)`, `μ = W_μ h + b_μ`, `log σ² = W_v h + b_v`.
//! Decoder: `g = tanh(W₃z + b₃)`, `x̃ = logistic(W₄g + b₄)`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::loss::{kl_loss, tree_loss};
use crate::error::{Error, Result};

/// Fully connected layer, weights row-major `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
        }
    }

    /// Uniform in `±sqrt(6/(fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let s = (6.0 / (n_in + n_out) as f64).sqrt();
        let w = (0..n_in * n_out).map(|_| rng.random_range(-s..=s)).collect();
        Self {
            n_in,
            n_out,
            w,
            b: vec![0.0; n_out],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_in);
        self.w
            .chunks_exact(self.n_in)
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    /// Accumulates `δ ⊗ x` into this layer (used as a gradient buffer) and
    /// returns `Wᵀδ` computed with `weights`.
    fn backward(&mut self, weights: &Dense, x: &[f64], delta: &[f64]) -> Vec<f64> {
        let mut back = vec![0.0; self.n_in];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            self.b[o] += d;
            let row = o * self.n_in;
            for i in 0..self.n_in {
                self.w[row + i] += d * x[i];
                back[i] += weights.w[row + i] * d;
            }
        }
        back
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeNetwork {
    pub enc_hidden: Dense,
    pub enc_mu: Dense,
    pub enc_logvar: Dense,
    pub dec_hidden: Dense,
    pub dec_out: Dense,
}

/// Reparameterized latent draw `z = μ + σ ⊙ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eps: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub latent: LatentSample,
    pub x_tilde: Vec<f64>,
}

/// Per-datum objective split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    /// `−(1/(2n_s)) Σ_l ℓ(x, x̃⁽ˡ⁾)`, non-negative.
    pub recon: f64,
    pub kl: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.recon + self.kl
    }
}

pub(crate) fn logistic(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

pub const TENSOR_NAMES: [&str; 10] = [
    "enc_hidden.w",
    "enc_hidden.b",
    "enc_mu.w",
    "enc_mu.b",
    "enc_logvar.w",
    "enc_logvar.b",
    "dec_hidden.w",
    "dec_hidden.b",
    "dec_out.w",
    "dec_out.b",
];

impl VaeNetwork {
    pub fn zeros(input_dim: usize, hidden_dim: usize, latent_dim: usize) -> Self {
        Self {
            enc_hidden: Dense::zeros(input_dim, hidden_dim),
            enc_mu: Dense::zeros(hidden_dim, latent_dim),
            enc_logvar: Dense::zeros(hidden_dim, latent_dim),
            dec_hidden: Dense::zeros(latent_dim, hidden_dim),
            dec_out: Dense::zeros(hidden_dim, input_dim),
        }
    }

    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, latent_dim: usize, rng: &mut R) -> Self {
        Self {
            enc_hidden: Dense::glorot(input_dim, hidden_dim, rng),
            enc_mu: Dense::glorot(hidden_dim, latent_dim, rng),
            enc_logvar: Dense::glorot(hidden_dim, latent_dim, rng),
            dec_hidden: Dense::glorot(latent_dim, hidden_dim, rng),
            dec_out: Dense::glorot(hidden_dim, input_dim, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim(), self.latent_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.enc_hidden.n_in
    }
    pub fn hidden_dim(&self) -> usize {
        self.enc_hidden.n_out
    }
    pub fn latent_dim(&self) -> usize {
        self.enc_mu.n_out
    }

    pub fn tensors(&self) -> [&[f64]; 10] {
        [
            &self.enc_hidden.w,
            &self.enc_hidden.b,
            &self.enc_mu.w,
            &self.enc_mu.b,
            &self.enc_logvar.w,
            &self.enc_logvar.b,
            &self.dec_hidden.w,
            &self.dec_hidden.b,
            &self.dec_out.w,
            &self.dec_out.b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 10] {
        [
            &mut self.enc_hidden.w,
            &mut self.enc_hidden.b,
            &mut self.enc_mu.w,
            &mut self.enc_mu.b,
            &mut self.enc_logvar.w,
            &mut self.enc_logvar.b,
            &mut self.dec_hidden.w,
            &mut self.dec_hidden.b,
            &mut self.dec_out.w,
            &mut self.dec_out.b,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &VaeNetwork, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Returns `(h, μ, log σ²)`.
    fn encode_raw(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = self.enc_hidden.forward(x).into_iter().map(f64::tanh).collect();
        let mu = self.enc_mu.forward(&h);
        let logvar = self.enc_logvar.forward(&h);
        (h, mu, logvar)
    }

    /// Posterior mean and standard deviation for `x`.
    pub fn encode(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (_, mu, logvar) = self.encode_raw(x);
        let sigma = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
        (mu, sigma)
    }

    pub fn decode(&self, z: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = self.dec_hidden.forward(z).into_iter().map(f64::tanh).collect();
        self.dec_out.forward(&g).into_iter().map(logistic).collect()
    }

    pub fn forward(&self, x: &[f64], eps: &[f64]) -> Result<ForwardPass> {
        if x.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if eps.len() != self.latent_dim() {
            return Err(Error::LengthMismatch {
                expected: self.latent_dim(),
                actual: eps.len(),
            });
        }
        let (mu, sigma) = self.encode(x);
        let z: Vec<f64> = mu.iter().zip(&sigma).zip(eps).map(|((m, s), e)| m + s * e).collect();
        let x_tilde = self.decode(&z);
        Ok(ForwardPass {
            latent: LatentSample {
                mu,
                sigma,
                eps: eps.to_vec(),
                z,
            },
            x_tilde,
        })
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.latent_dim()).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Per-datum objective `−(1/(2n_s)) Σ_l ℓ(x, x̃⁽ˡ⁾) + KL` for the given
    /// noise draws.
    pub fn objective(&self, x: &[f64], noise: &[Vec<f64>], weights: &[f64], clip: f64) -> Result<LossParts> {
        let c = 1.0 / (2.0 * noise.len() as f64);
        let mut recon = 0.0;
        let mut kl = 0.0;
        for eps in noise {
            let pass = self.forward(x, eps)?;
            recon -= c * tree_loss(x, &pass.x_tilde, weights, clip)?;
            kl = kl_loss(&pass.latent.mu, &pass.latent.sigma);
        }
        Ok(LossParts { recon, kl })
    }

    /// Objective and its exact gradient with respect to every parameter.
    /// Entries whose output is clamped contribute no gradient, matching the
    /// clamped loss.
    pub fn loss_and_grad(
        &self,
        x: &[f64],
        noise: &[Vec<f64>],
        weights: &[f64],
        clip: f64,
    ) -> Result<(LossParts, VaeNetwork)> {
        if x.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if weights.len() != x.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: weights.len(),
            });
        }
        if noise.is_empty() {
            return Err(Error::Config("at least one noise draw is required".into()));
        }
        let mut grad = self.zeros_like();
        let (h, mu, logvar) = self.encode_raw(x);
        let sigma: Vec<f64> = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
        let latent = mu.len();
        let c = 1.0 / (2.0 * noise.len() as f64);

        let mut d_mu: Vec<f64> = mu.clone();
        let mut d_logvar: Vec<f64> = sigma.iter().map(|s| 0.5 * (s * s - 1.0)).collect();
        let mut recon = 0.0;

        for eps in noise {
            if eps.len() != latent {
                return Err(Error::LengthMismatch {
                    expected: latent,
                    actual: eps.len(),
                });
            }
            let z: Vec<f64> = (0..latent).map(|k| mu[k] + sigma[k] * eps[k]).collect();
            let g: Vec<f64> = self.dec_hidden.forward(&z).into_iter().map(f64::tanh).collect();
            let out: Vec<f64> = self.dec_out.forward(&g).into_iter().map(logistic).collect();
            recon -= c * tree_loss(x, &out, weights, clip)?;

            let d_out: Vec<f64> = out
                .iter()
                .zip(x)
                .zip(weights)
                .map(|((&s, &xk), &w)| {
                    if s > clip && s < 1.0 - clip {
                        -c * w * (xk - s)
                    } else {
                        0.0
                    }
                })
                .collect();
            let d_g = grad.dec_out.backward(&self.dec_out, &g, &d_out);
            let d_a3: Vec<f64> = d_g.iter().zip(&g).map(|(d, g)| d * (1.0 - g * g)).collect();
            let d_z = grad.dec_hidden.backward(&self.dec_hidden, &z, &d_a3);
            for k in 0..latent {
                d_mu[k] += d_z[k];
                d_logvar[k] += d_z[k] * eps[k] * 0.5 * sigma[k];
            }
        }

        let d_h_mu = grad.enc_mu.backward(&self.enc_mu, &h, &d_mu);
        let d_h_lv = grad.enc_logvar.backward(&self.enc_logvar, &h, &d_logvar);
        let d_a1: Vec<f64> = (0..h.len())
            .map(|i| (d_h_mu[i] + d_h_lv[i]) * (1.0 - h[i] * h[i]))
            .collect();
        grad.enc_hidden.backward(&self.enc_hidden, x, &d_a1);

        let kl = kl_loss(&mu, &sigma);
        Ok((LossParts { recon, kl }, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn zero_network_forward() {
        let net = VaeNetwork::zeros(12, 5, 2);
        let pass = net.forward(&[1.0; 12], &[0.3, -0.7]).unwrap();
        assert_eq!(pass.latent.mu, vec![0.0, 0.0]);
        assert_eq!(pass.latent.sigma, vec![1.0, 1.0]);
        assert!(pass.x_tilde.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn zero_noise_gives_the_mean() {
        let net = VaeNetwork::init(12, 5, 2, &mut from_seed(1));
        let x: Vec<f64> = (0..12).map(|k| (k % 4 == 1) as u8 as f64).collect();
        let pass = net.forward(&x, &[0.0, 0.0]).unwrap();
        assert_eq!(pass.latent.z, pass.latent.mu);
    }

    #[test]
    fn latent_is_linear_in_noise() {
        let net = VaeNetwork::init(12, 5, 2, &mut from_seed(2));
        let x = vec![0.0; 12];
        let e1 = [0.5, -1.0];
        let e2 = [-0.25, 2.0];
        let p1 = net.forward(&x, &e1).unwrap();
        let p2 = net.forward(&x, &e2).unwrap();
        for k in 0..2 {
            let diff = p1.latent.z[k] - p2.latent.z[k];
            assert!((diff - p1.latent.sigma[k] * (e1[k] - e2[k])).abs() < 1e-12);
        }
        assert!(p1.x_tilde.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn objective_matches_loss_and_grad() {
        let net = VaeNetwork::init(12, 5, 2, &mut from_seed(3));
        let x: Vec<f64> = (0..12).map(|k| (k % 4 == 2) as u8 as f64).collect();
        let noise = vec![vec![0.1, -0.2], vec![1.0, 0.4]];
        let w = vec![1.0; 12];
        let a = net.objective(&x, &noise, &w, 1e-6).unwrap();
        let (b, _) = net.loss_and_grad(&x, &noise, &w, 1e-6).unwrap();
        assert!((a.total() - b.total()).abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let net = VaeNetwork::zeros(12, 5, 2);
        assert!(net.forward(&[0.0; 11], &[0.0; 2]).is_err());
        assert!(net.forward(&[0.0; 12], &[0.0; 3]).is_err());
    }
}
