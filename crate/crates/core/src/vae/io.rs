//! Parameter files: a text header terminated by `end_header`, followed by
//! every tensor as little-endian `f64` in the order of
//! [`TENSOR_NAMES`](super::network::TENSOR_NAMES).

use super::loss::TreeShape;
use super::network::VaeNetwork;
use super::train::{TrainConfig, TrainedVae};
use crate::error::{Error, Result};

const MAGIC: &str = "veb-vae 1";
const END: &str = "end_header\n";

/// Metadata recovered from a parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeHeader {
    pub shape: TreeShape,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
    pub config: TrainConfig,
}

/// Serializes a trained network. `comments` are written as `# ` lines in the
/// header and ignored on load.
pub fn write_params(trained: &TrainedVae, comments: &[String]) -> Result<Vec<u8>> {
    let net = &trained.net;
    let mut head = format!("{MAGIC}\n");
    for c in comments {
        for line in c.lines() {
            head.push_str(&format!("# {line}\n"));
        }
    }
    let config = serde_json::to_string(&trained.config).map_err(|e| Error::parse("vae config", e.to_string()))?;
    head.push_str(&format!(
        "depth {}\nbranching {}\nn_actions {}\ninput_dim {}\nhidden_dim {}\nlatent_dim {}\nseed {}\nepochs {}\nfinal_loss {}\nconfig {}\n{END}",
        trained.shape.depth,
        trained.shape.branching,
        trained.shape.n_actions,
        net.input_dim(),
        net.hidden_dim(),
        net.latent_dim(),
        trained.config.seed,
        trained.epochs(),
        trained.final_loss(),
        config,
    ));
    let mut bytes = head.into_bytes();
    for t in net.tensors() {
        for v in t {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(bytes)
}

pub fn read_params(bytes: &[u8]) -> Result<(VaeHeader, VaeNetwork)> {
    let what = "vae parameters";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END.as_bytes())
        .ok_or_else(|| Error::parse(what, "missing end_header"))?;
    let head = std::str::from_utf8(&bytes[..end]).map_err(|e| Error::parse(what, e.to_string()))?;
    let mut lines = head.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::parse(what, "bad magic line"));
    }
    let mut fields = std::collections::HashMap::new();
    for line in lines.filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (k, v) = line.split_once(' ').ok_or_else(|| Error::parse(what, format!("bad header line `{line}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::parse(what, format!("missing `{k}`")));
    let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| Error::parse(what, format!("bad `{k}`"))) };
    let shape = TreeShape {
        depth: num("depth")?,
        branching: num("branching")?,
        n_actions: num("n_actions")?,
    };
    let input_dim = num("input_dim")?;
    if input_dim != shape.dim() {
        return Err(Error::LengthMismatch {
            expected: shape.dim(),
            actual: input_dim,
        });
    }
    let header = VaeHeader {
        shape,
        hidden_dim: num("hidden_dim")?,
        latent_dim: num("latent_dim")?,
        seed: get("seed")?.parse().map_err(|_| Error::parse(what, "bad `seed`"))?,
        epochs: num("epochs")?,
        final_loss: get("final_loss")?.parse().map_err(|_| Error::parse(what, "bad `final_loss`"))?,
        config: serde_json::from_str(get("config")?).map_err(|e| Error::parse(what, e.to_string()))?,
    };
    let mut net = VaeNetwork::zeros(input_dim, header.hidden_dim, header.latent_dim);
    let body = &bytes[end + END.len()..];
    if body.len() != 8 * net.param_count() {
        return Err(Error::LengthMismatch {
            expected: 8 * net.param_count(),
            actual: body.len(),
        });
    }
    let mut chunks = body.chunks_exact(8);
    for t in net.tensors_mut() {
        for v in t.iter_mut() {
            let c = chunks.next().expect("length checked");
            *v = f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        }
    }
    Ok((header, net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::zzoh_encode;
    use crate::domain::tiger;
    use crate::vae::train::train;

    #[test]
    fn params_roundtrip_bitwise() {
        let shape = TreeShape {
            depth: 2,
            branching: 2,
            n_actions: 3,
        };
        let data = vec![zzoh_encode(&tiger::default_opponent_tree(2), &shape.alphabet()).unwrap()];
        let cfg = TrainConfig {
            max_epochs: 5,
            hidden_dim: 4,
            latent_dim: 2,
            seed: 11,
            ..TrainConfig::default()
        };
        let trained = train(&data, shape, &cfg).unwrap();
        let bytes = write_params(&trained, &["config line\nsecond".to_string()]).unwrap();
        let (header, net) = read_params(&bytes).unwrap();
        assert_eq!(net, trained.net);
        assert_eq!(header.shape, shape);
        assert_eq!(header.epochs, trained.epochs());
        assert_eq!(header.final_loss, trained.final_loss());
        assert_eq!(header.config, cfg);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let shape = TreeShape {
            depth: 1,
            branching: 2,
            n_actions: 3,
        };
        let data = vec![zzoh_encode(&tiger::default_opponent_tree(1), &shape.alphabet()).unwrap()];
        let cfg = TrainConfig {
            max_epochs: 2,
            hidden_dim: 3,
            latent_dim: 1,
            ..TrainConfig::default()
        };
        let mut bytes = write_params(&train(&data, shape, &cfg).unwrap(), &[]).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(read_params(&bytes).is_err());
        assert!(read_params(b"nothing here").is_err());
    }
}
